//! Graphviz DOT emitters. Node ids are canonical dotted paths, so the
//! same stage gets the same id in every view; thimacs become nested
//! clusters; triggers are dashed where flows are solid.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::dynamics::{BehaviorGraph, EdgeMode, EventLayer};
use crate::model::{QualifiedRef, StaticModel, Thimac};

/// Fill colors assigned to events, in sorted event-id order.
const PALETTE: &[&str] = &[
    "#bfdbfe", "#bbf7d0", "#fde68a", "#fecaca", "#ddd6fe", "#fbcfe8", "#a7f3d0", "#fed7aa",
    "#e2e8f0", "#c7d2fe",
];

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// The machine structure: one cluster per thimac, one node per stage
/// or store, solid flow edges, dashed trigger edges.
pub fn dot_static(model: &StaticModel) -> String {
    dot_with_fills(model, &BTreeMap::new())
}

/// The static view with event regions shaded. With `event`, only that
/// event's region is filled; otherwise every event in the layer gets a
/// palette color (sorted event ids; the first event to claim a stage
/// colors it).
pub fn dot_events(model: &StaticModel, layer: &EventLayer, event: Option<&str>) -> String {
    let mut ids: Vec<&str> = layer.events.iter().map(|e| e.id.as_str()).collect();
    ids.sort_unstable();
    let color_of = |id: &str| {
        let slot = ids.iter().position(|x| *x == id).unwrap_or(0);
        PALETTE[slot % PALETTE.len()]
    };

    let mut fills: BTreeMap<String, &str> = BTreeMap::new();
    for id in &ids {
        if event.is_some_and(|only| only != *id) {
            continue;
        }
        let Some(e) = layer.event(id) else { continue };
        for r in &e.region {
            let canonical = model.canonical(r).unwrap_or_else(|| r.clone()).to_string();
            fills.entry(canonical).or_insert_with(|| color_of(id));
        }
    }
    dot_with_fills(model, &fills)
}

fn dot_with_fills(model: &StaticModel, fills: &BTreeMap<String, &str>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&model.name));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box, style=rounded, fontname=\"Helvetica\"];\n");
    out.push_str("  edge [fontname=\"Helvetica\"];\n");
    for root in &model.roots {
        cluster(&mut out, root, &QualifiedRef::new(vec![root.name.clone()]), 1, fills);
    }
    for flow in &model.flows {
        let _ = writeln!(
            out,
            "  {} -> {};",
            quote(&flow.from.to_string()),
            quote(&flow.to.to_string())
        );
    }
    for trigger in &model.triggers {
        let _ = writeln!(
            out,
            "  {} -> {} [style=dashed];",
            quote(&trigger.from.to_string()),
            quote(&trigger.to.to_string())
        );
    }
    out.push_str("}\n");
    out
}

fn cluster(
    out: &mut String,
    thimac: &Thimac,
    path: &QualifiedRef,
    depth: usize,
    fills: &BTreeMap<String, &str>,
) {
    let pad = "  ".repeat(depth);
    let cluster_id = format!("cluster_{}", path.to_string().replace('.', "__"));
    let _ = writeln!(out, "{pad}subgraph {} {{", quote(&cluster_id));
    let _ = writeln!(out, "{pad}  label={};", quote(&thimac.name));
    for stage in &thimac.stages {
        let node = path.child(&stage.name).to_string();
        let label = format!("{} {}", stage.kind, stage.name);
        match fills.get(&node) {
            Some(color) => {
                let _ = writeln!(
                    out,
                    "{pad}  {} [label={}, style=\"rounded,filled\", fillcolor={}];",
                    quote(&node),
                    quote(&label),
                    quote(color)
                );
            }
            None => {
                let _ = writeln!(out, "{pad}  {} [label={}];", quote(&node), quote(&label));
            }
        }
    }
    for store in &thimac.stores {
        let node = path.child(&store.name).to_string();
        let label = format!("store {}", store.name);
        let _ = writeln!(
            out,
            "{pad}  {} [label={}, shape=cylinder, style=solid];",
            quote(&node),
            quote(&label)
        );
    }
    for child in &thimac.children {
        cluster(out, child, &path.child(&child.name), depth + 1, fills);
    }
    let _ = writeln!(out, "{pad}}}");
}

/// The behavior view: one node per event the graph mentions (layer
/// declaration order), doubled borders on start events, guard and
/// delay labels on the edges.
pub fn dot_behavior(layer: &EventLayer, behavior: &BehaviorGraph) -> String {
    let mentioned = |id: &str| {
        behavior.starts.iter().any(|s| s.event == id)
            || behavior.edges.iter().any(|e| e.from == id || e.to == id)
    };
    let mut nodes: Vec<&str> = layer
        .events
        .iter()
        .map(|e| e.id.as_str())
        .filter(|id| mentioned(id))
        .collect();
    for start in &behavior.starts {
        if !nodes.contains(&start.event.as_str()) {
            nodes.push(&start.event);
        }
    }
    for edge in &behavior.edges {
        for id in [&edge.from, &edge.to] {
            if !nodes.contains(&id.as_str()) {
                nodes.push(id);
            }
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&format!("{}_behavior", layer.model_name)));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=ellipse, fontname=\"Helvetica\"];\n");
    out.push_str("  edge [fontname=\"Helvetica\"];\n");
    for id in &nodes {
        if behavior.starts.iter().any(|s| s.event == *id) {
            let _ = writeln!(out, "  {} [peripheries=2];", quote(id));
        } else {
            let _ = writeln!(out, "  {};", quote(id));
        }
    }
    for edge in &behavior.edges {
        let attr = match &edge.mode {
            EdgeMode::Immediate => String::new(),
            EdgeMode::Guarded(guard) => format!(" [label={}]", quote(&format!("when {guard}"))),
            EdgeMode::Timed(delay) => {
                format!(" [label={}]", quote(&format!("after {}s", delay.compact())))
            }
        };
        let _ = writeln!(out, "  {} -> {}{};", quote(&edge.from), quote(&edge.to), attr);
    }
    out.push_str("}\n");
    out
}
