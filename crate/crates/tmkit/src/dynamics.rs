//! The dynamic layers over a static model: events (regions of stages with
//! durations and payload capture) and the behavior graph (the chronology
//! of events, with guarded and timed edges).

use std::collections::BTreeSet;

use crate::decimal::Decimal;
use crate::diag::SourcePos;
use crate::engine::{eval_expr, EvalContext, RuntimeError};
use crate::model::{Expr, QualifiedRef, StageGraph, StaticModel, Value};

/// Where a captured payload entry comes from: a store read or a field of
/// the originating stimulus.
#[derive(Clone, PartialEq, Debug)]
pub enum PayloadSrc {
    Store(QualifiedRef),
    Field(String),
}

/// An event: a region of stages that fires as one unit, optionally
/// refining a coarser event, taking `duration` seconds, and capturing a
/// payload snapshot when it completes.
#[derive(Clone, PartialEq, Debug)]
pub struct Event {
    pub id: String,
    pub refines: Option<String>,
    pub region: Vec<QualifiedRef>,
    pub duration: Decimal,
    pub payload_spec: Vec<(String, PayloadSrc)>,
    pub pos: SourcePos,
}

/// All events declared over one model.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct EventLayer {
    pub model_name: String,
    pub events: Vec<Event>,
}

impl EventLayer {
    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }
}

/// How a behavior edge fires once its source event completes.
#[derive(Clone, PartialEq, Debug)]
pub enum EdgeMode {
    /// Fires unconditionally at the source occurrence's end.
    Immediate,
    /// Fires at the source occurrence's end iff the guard holds.
    Guarded(Expr),
    /// Fires unconditionally, `0` seconds after the source occurrence's
    /// end (strictly positive).
    Timed(Decimal),
}

#[derive(Clone, PartialEq, Debug)]
pub struct BehaviorEdge {
    pub from: String,
    pub to: String,
    pub mode: EdgeMode,
    pub pos: SourcePos,
}

/// An external stimulus at `stage` starts `event`.
#[derive(Clone, PartialEq, Debug)]
pub struct StartBinding {
    pub stage: QualifiedRef,
    pub event: String,
    pub pos: SourcePos,
}

/// The chronology of events: start bindings plus edges, both kept in
/// declaration order (successor scheduling is order-sensitive).
#[derive(Clone, PartialEq, Debug, Default)]
pub struct BehaviorGraph {
    pub starts: Vec<StartBinding>,
    pub edges: Vec<BehaviorEdge>,
}

impl BehaviorGraph {
    /// The event started by a stimulus at `stage`, if bound.
    pub fn start_for(&self, stage: &QualifiedRef) -> Option<&StartBinding> {
        self.starts.iter().find(|s| &s.stage == stage)
    }

    pub fn edges_from<'a>(&'a self, event: &'a str) -> impl Iterator<Item = &'a BehaviorEdge> {
        self.edges.iter().filter(move |e| e.from == event)
    }
}

/// The induced subgraph of the model's stage graph on an event's region:
/// member node ids plus every arc with both endpoints in the region.
#[derive(Clone, PartialEq, Debug)]
pub struct RegionSubgraph {
    pub nodes: Vec<usize>,
    pub arcs: Vec<(usize, usize)>,
}

/// Cuts the event's region out of the stage graph. Region refs that do
/// not name stages are ignored (validation reports them).
pub fn region_subgraph(event: &Event, model: &StaticModel, graph: &StageGraph) -> RegionSubgraph {
    let members: BTreeSet<usize> = event
        .region
        .iter()
        .filter_map(|r| model.canonical(r).and_then(|c| graph.node_id(&c)))
        .collect();
    RegionSubgraph { nodes: members.iter().copied().collect(), arcs: graph.induced_arcs(&members) }
}

/// Computes which edges out of `occ`'s event fire and when, in edge
/// declaration order. Timed edges fire unconditionally at
/// `valid_end + duration`; immediate edges at `valid_end`, subject to
/// their guard. Guards read the occurrence's payload and current stores.
pub fn enabled_successors(
    graph: &BehaviorGraph,
    occ: &crate::engine::Occurrence,
    stores: &crate::engine::StoreState,
) -> Result<Vec<(String, Decimal)>, RuntimeError> {
    let ctx = EvalContext { fields: &occ.payload, stores };
    let mut out = Vec::new();
    for edge in graph.edges_from(&occ.event) {
        match &edge.mode {
            EdgeMode::Immediate => out.push((edge.to.clone(), occ.valid_end)),
            EdgeMode::Guarded(guard) => {
                let value = eval_expr(guard, &ctx).map_err(|e| RuntimeError::Eval {
                    what: format!("guard on edge {} -> {}", edge.from, edge.to),
                    detail: e,
                    pos: edge.pos.clone(),
                })?;
                match value {
                    Value::Bool(true) => out.push((edge.to.clone(), occ.valid_end)),
                    Value::Bool(false) => {}
                    other => {
                        return Err(RuntimeError::Eval {
                            what: format!("guard on edge {} -> {}", edge.from, edge.to),
                            detail: format!("guard evaluated to {}, not a boolean", other.kind_name()),
                            pos: edge.pos.clone(),
                        })
                    }
                }
            }
            EdgeMode::Timed(delay) => {
                let at = occ.valid_end.checked_add(*delay).ok_or_else(|| RuntimeError::Eval {
                    what: format!("timed edge {} -> {}", edge.from, edge.to),
                    detail: "fire time overflows the clock".into(),
                    pos: edge.pos.clone(),
                })?;
                out.push((edge.to.clone(), at));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Occurrence;
    use std::collections::BTreeMap;

    fn occ(event: &str, payload: &[(&str, Value)]) -> Occurrence {
        Occurrence {
            seq: 0,
            event: event.into(),
            valid_start: Decimal::from_int(7),
            valid_end: Decimal::from_int(7),
            duration: Decimal::ZERO,
            payload: payload.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            urgency: None,
            cause: crate::engine::Cause::Stimulus(0),
        }
    }

    fn graph() -> BehaviorGraph {
        let guard = |field: &str, want: &str| {
            Expr::binary(
                crate::model::BinOp::Eq,
                Expr::Field(field.into()),
                Expr::Text(want.into()),
            )
        };
        BehaviorGraph {
            starts: vec![],
            edges: vec![
                BehaviorEdge {
                    from: "E5".into(),
                    to: "E6".into(),
                    mode: EdgeMode::Guarded(guard("type", "transfer")),
                    pos: SourcePos::synthetic(),
                },
                BehaviorEdge {
                    from: "E5".into(),
                    to: "E13".into(),
                    mode: EdgeMode::Guarded(guard("type", "deposit")),
                    pos: SourcePos::synthetic(),
                },
                BehaviorEdge {
                    from: "E6".into(),
                    to: "E8".into(),
                    mode: EdgeMode::Timed(Decimal::from_int(120)),
                    pos: SourcePos::synthetic(),
                },
                BehaviorEdge {
                    from: "E13".into(),
                    to: "E14".into(),
                    mode: EdgeMode::Immediate,
                    pos: SourcePos::synthetic(),
                },
            ],
        }
    }

    #[test]
    fn guards_pick_the_matching_branch() {
        let g = graph();
        let stores = BTreeMap::new();
        let got =
            enabled_successors(&g, &occ("E5", &[("type", Value::Text("deposit".into()))]), &stores)
                .unwrap();
        assert_eq!(got, vec![("E13".into(), Decimal::from_int(7))]);
    }

    #[test]
    fn unmatched_guards_yield_no_successors() {
        let g = graph();
        let stores = BTreeMap::new();
        let got =
            enabled_successors(&g, &occ("E5", &[("type", Value::Text("loan".into()))]), &stores)
                .unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn timed_edges_fire_after_their_delay() {
        let g = graph();
        let stores = BTreeMap::new();
        let got = enabled_successors(&g, &occ("E6", &[]), &stores).unwrap();
        assert_eq!(got, vec![("E8".into(), Decimal::from_int(127))]);
    }

    #[test]
    fn immediate_edges_fire_at_valid_end() {
        let g = graph();
        let stores = BTreeMap::new();
        let got = enabled_successors(&g, &occ("E13", &[]), &stores).unwrap();
        assert_eq!(got, vec![("E14".into(), Decimal::from_int(7))]);
    }

    #[test]
    fn missing_guard_field_is_a_runtime_error() {
        let g = graph();
        let stores = BTreeMap::new();
        let err = enabled_successors(&g, &occ("E5", &[]), &stores).unwrap_err();
        assert_eq!(err.code(), "R101");
    }

    #[test]
    fn region_subgraph_induces_member_arcs() {
        use crate::model::{stage_graph, Flow, Stage, StageKind, Thimac};
        let t = Thimac {
            name: "T".into(),
            stages: ["a", "b", "c"]
                .iter()
                .map(|n| Stage {
                    name: (*n).into(),
                    kind: StageKind::Process,
                    assignment: None,
                    label: None,
                    pos: SourcePos::synthetic(),
                })
                .collect(),
            stores: vec![],
            children: vec![],
            pos: SourcePos::synthetic(),
        };
        let model = StaticModel {
            name: "M".into(),
            roots: vec![t],
            flows: vec![
                Flow {
                    from: "T.a".parse().unwrap(),
                    to: "T.b".parse().unwrap(),
                    pos: SourcePos::synthetic(),
                },
                Flow {
                    from: "T.b".parse().unwrap(),
                    to: "T.c".parse().unwrap(),
                    pos: SourcePos::synthetic(),
                },
            ],
            triggers: vec![],
        };
        let graph = stage_graph(&model);
        let event = Event {
            id: "E1".into(),
            refines: None,
            region: vec!["T.a".parse().unwrap(), "T.b".parse().unwrap()],
            duration: Decimal::ZERO,
            payload_spec: vec![],
            pos: SourcePos::synthetic(),
        };
        let sub = region_subgraph(&event, &model, &graph);
        assert_eq!(sub.nodes.len(), 2);
        // Only a->b survives; b->c leaves the region.
        assert_eq!(sub.arcs.len(), 1);
        let single = Event { region: vec!["T.c".parse().unwrap()], ..event };
        let sub = region_subgraph(&single, &model, &graph);
        assert_eq!((sub.nodes.len(), sub.arcs.len()), (1, 0));
    }
}
