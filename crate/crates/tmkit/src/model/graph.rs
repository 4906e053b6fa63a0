//! Directed graph over a model's stages, used by validation (region
//! connectivity), the renderer, and the engine (assignment ordering).
//!
//! Nodes are canonical stage paths in model walk order. Arcs come from
//! three sources: flows between stages, triggers, and store writes (an
//! explicit flow into a store, or a stage assignment's `into` target).
//! Store-write arcs point at stores, which are not graph nodes, so they
//! are kept separately in `writes`.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use crate::model::{QualifiedRef, Resolution, StaticModel};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ArcKind {
    Flow,
    Trigger,
}

/// One stage-to-stage arc, endpoints as node indices.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GraphArc {
    pub from: usize,
    pub to: usize,
    pub kind: ArcKind,
}

/// Stage connectivity for one model. Node order matches the model walk,
/// so indices are stable across runs.
#[derive(Clone, Debug, Default)]
pub struct StageGraph {
    /// Canonical stage paths, in model walk (declaration) order.
    pub nodes: Vec<QualifiedRef>,
    /// Path string -> node index.
    pub index: BTreeMap<String, usize>,
    /// Flow and trigger arcs, in declaration order (flows first).
    pub arcs: Vec<GraphArc>,
    /// Store writes: (writing stage index, canonical store path), in
    /// declaration order; explicit flows into stores come first.
    pub writes: Vec<(usize, QualifiedRef)>,
}

impl StageGraph {
    pub fn node_id(&self, path: &QualifiedRef) -> Option<usize> {
        self.index.get(&path.to_string()).copied()
    }

    /// Arcs of either kind restricted to `members`, as index pairs in
    /// declaration order.
    pub fn induced_arcs(&self, members: &BTreeSet<usize>) -> Vec<(usize, usize)> {
        self.arcs
            .iter()
            .filter(|a| members.contains(&a.from) && members.contains(&a.to))
            .map(|a| (a.from, a.to))
            .collect()
    }

    /// Whether `members` form a weakly connected subgraph under flow and
    /// trigger arcs. Empty and singleton sets count as connected.
    pub fn weakly_connected(&self, members: &BTreeSet<usize>) -> bool {
        let mut iter = members.iter();
        let Some(&start) = iter.next() else { return true };
        let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (a, b) in self.induced_arcs(members) {
            adjacency.entry(a).or_default().push(b);
            adjacency.entry(b).or_default().push(a);
        }
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            for &next in adjacency.get(&n).into_iter().flatten() {
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        seen.len() == members.len()
    }

    /// Topological order of `members` under the induced arcs, by Kahn's
    /// algorithm. Ties break toward lower node index (declaration
    /// order); if a cycle blocks some members, they are appended in
    /// declaration order so the result always covers every member.
    pub fn topo_order(&self, members: &BTreeSet<usize>) -> Vec<usize> {
        let mut indegree: BTreeMap<usize, usize> = members.iter().map(|&m| (m, 0)).collect();
        let mut successors: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (a, b) in self.induced_arcs(members) {
            *indegree.get_mut(&b).expect("member") += 1;
            successors.entry(a).or_default().push(b);
        }
        let mut ready: BTreeSet<usize> =
            indegree.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
        let mut order = Vec::with_capacity(members.len());
        while let Some(&n) = ready.iter().next() {
            ready.remove(&n);
            order.push(n);
            for &next in successors.get(&n).into_iter().flatten() {
                let d = indegree.get_mut(&next).expect("member");
                *d -= 1;
                if *d == 0 {
                    ready.insert(next);
                }
            }
        }
        if order.len() < members.len() {
            let placed: BTreeSet<usize> = order.iter().copied().collect();
            order.extend(members.iter().copied().filter(|m| !placed.contains(m)));
        }
        order
    }
}

/// Builds the stage graph for a model. Assumes references resolve; arcs
/// whose endpoints do not resolve to stages are skipped (validation
/// reports those separately).
pub fn stage_graph(model: &StaticModel) -> StageGraph {
    let mut graph = StageGraph::default();
    for (path, res) in model.walk() {
        if let Resolution::Stage { .. } = res {
            let id = graph.nodes.len();
            match graph.index.entry(path.to_string()) {
                Entry::Vacant(slot) => {
                    slot.insert(id);
                    graph.nodes.push(path);
                }
                // Duplicate names are a validation error; first wins here.
                Entry::Occupied(_) => {}
            }
        }
    }

    let stage_id = |r: &QualifiedRef| -> Option<usize> {
        let canon = model.canonical(r)?;
        graph.index.get(&canon.to_string()).copied()
    };
    let store_target = |r: &QualifiedRef| -> Option<QualifiedRef> {
        let canon = model.canonical(r)?;
        match model.resolve(&canon) {
            Some(Resolution::Store { .. }) => Some(canon),
            _ => None,
        }
    };

    let mut writes = Vec::new();
    for flow in &model.flows {
        match (stage_id(&flow.from), stage_id(&flow.to)) {
            (Some(a), Some(b)) => graph.arcs.push(GraphArc { from: a, to: b, kind: ArcKind::Flow }),
            (Some(a), None) => {
                // A flow into a store is a store write, not a stage arc.
                if let Some(store) = store_target(&flow.to) {
                    writes.push((a, store));
                }
            }
            _ => {}
        }
    }
    for trigger in &model.triggers {
        if let (Some(a), Some(b)) = (stage_id(&trigger.from), stage_id(&trigger.to)) {
            graph.arcs.push(GraphArc { from: a, to: b, kind: ArcKind::Trigger });
        }
    }
    // Assignment targets, in walk order after explicit store flows.
    for (path, res) in model.walk() {
        if let Resolution::Stage { stage, .. } = res {
            let Some(into) = stage.assignment.as_ref().and_then(|a| a.into.as_ref()) else {
                continue;
            };
            if let (Some(id), Some(store)) = (stage_id(&path), store_target(into)) {
                writes.push((id, store));
            }
        }
    }
    graph.writes = writes;
    graph
}
