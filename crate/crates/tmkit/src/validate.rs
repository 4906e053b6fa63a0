//! Structural checks over parsed models, event layers, and behaviors.
//!
//! Each check is a pure function returning diagnostics sorted by source
//! position; an empty vector means the input is clean. Errors (E05x,
//! E06x) mark inputs the engine should refuse; warnings (W06x, W07x)
//! flag suspicious but runnable structure.

use std::collections::BTreeSet;

use crate::diag::{sort_diagnostics, Diagnostic};
use crate::dynamics::{BehaviorGraph, EdgeMode, EventLayer};
use crate::model::{stage_graph, QualifiedRef, Resolution, StageKind, StaticModel};

use StageKind::{Create, Process, Receive, Release, Transfer};

/// Flow pairs legal inside one machine. The table is closed: anything
/// not listed here or in [`INTER_FLOWS`] is rejected.
const INTRA_FLOWS: &[(StageKind, StageKind)] = &[
    (Receive, Process),
    (Receive, Release),
    (Process, Release),
    (Process, Create),
    (Create, Process),
    (Create, Release),
    (Release, Transfer),
];

/// Flow pairs legal between two different machines.
const INTER_FLOWS: &[(StageKind, StageKind)] = &[(Transfer, Receive), (Transfer, Transfer)];

/// Checks every flow and trigger of a model against the legality table
/// (E050), the machine-crossing rule for triggers (E051), and the
/// store-write rule (E052), and warns about isolated stages (W060).
pub fn validate_static(model: &StaticModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for flow in &model.flows {
        let from = model.resolve(&flow.from);
        let to = model.resolve(&flow.to);
        for (r, res) in [(&flow.from, &from), (&flow.to, &to)] {
            if res.is_none() {
                diags.push(Diagnostic::error(
                    "E011",
                    format!("unresolved reference '{r}'"),
                    flow.pos.clone(),
                ));
            }
        }
        let (Some(from), Some(to)) = (from, to) else { continue };
        match (from, to) {
            (Resolution::Stage { stage: f, .. }, Resolution::Stage { stage: t, .. }) => {
                let same_machine =
                    model.owner_path(&flow.from) == model.owner_path(&flow.to);
                let table = if same_machine { INTRA_FLOWS } else { INTER_FLOWS };
                if !table.contains(&(f.kind, t.kind)) {
                    let locality = if same_machine { "within one machine" } else { "between machines" };
                    diags.push(Diagnostic::error(
                        "E050",
                        format!(
                            "illegal flow {} -> {} {locality} ({} -> {})",
                            flow.from, flow.to, f.kind, t.kind
                        ),
                        flow.pos.clone(),
                    ));
                }
            }
            (Resolution::Stage { stage: f, .. }, Resolution::Store { .. }) => {
                if !matches!(f.kind, Create | Process) {
                    diags.push(Diagnostic::error(
                        "E052",
                        format!(
                            "store '{}' written from a {} stage; only create and process stages may write stores",
                            flow.to, f.kind
                        ),
                        flow.pos.clone(),
                    ));
                }
            }
            (Resolution::Store { .. }, _) => {
                diags.push(Diagnostic::error(
                    "E050",
                    format!("illegal flow: '{}' is a store and cannot be a flow source", flow.from),
                    flow.pos.clone(),
                ));
            }
            (Resolution::Thimac(_), _) | (_, Resolution::Thimac(_)) => {
                let culprit = if matches!(model.resolve(&flow.from), Some(Resolution::Thimac(_))) {
                    &flow.from
                } else {
                    &flow.to
                };
                diags.push(Diagnostic::error(
                    "E050",
                    format!("illegal flow: '{culprit}' is a thimac, not a stage or store"),
                    flow.pos.clone(),
                ));
            }
        }
    }

    for trigger in &model.triggers {
        let mut endpoints_ok = true;
        for r in [&trigger.from, &trigger.to] {
            match model.resolve(r) {
                Some(Resolution::Stage { .. }) => {}
                Some(other) => {
                    endpoints_ok = false;
                    diags.push(Diagnostic::error(
                        "E050",
                        format!("trigger endpoint '{r}' is a {}, not a stage", other.kind_name()),
                        trigger.pos.clone(),
                    ));
                }
                None => {
                    endpoints_ok = false;
                    diags.push(Diagnostic::error(
                        "E011",
                        format!("unresolved reference '{r}'"),
                        trigger.pos.clone(),
                    ));
                }
            }
        }
        if endpoints_ok && model.owner_path(&trigger.from) == model.owner_path(&trigger.to) {
            diags.push(Diagnostic::error(
                "E051",
                format!(
                    "trigger {} ~> {} stays inside one machine; triggers must cross machines",
                    trigger.from, trigger.to
                ),
                trigger.pos.clone(),
            ));
        }
    }

    // Isolation warnings: a stage no flow or trigger touches.
    let mut touched: BTreeSet<String> = BTreeSet::new();
    let canon = |r: &QualifiedRef| model.canonical(r).unwrap_or_else(|| r.clone()).to_string();
    for flow in &model.flows {
        touched.insert(canon(&flow.from));
        touched.insert(canon(&flow.to));
    }
    for trigger in &model.triggers {
        touched.insert(canon(&trigger.from));
        touched.insert(canon(&trigger.to));
    }
    for (path, res) in model.walk() {
        let Resolution::Stage { stage, .. } = res else { continue };
        if !touched.contains(&path.to_string()) {
            diags.push(Diagnostic::warning(
                "W060",
                format!("stage '{path}' has no incident flows or triggers"),
                stage.pos.clone(),
            ));
        }
    }

    sort_diagnostics(&mut diags);
    diags
}

/// Checks an event layer against its model: every region reference must
/// name a stage (E021), regions must be nonempty (E022) and weakly
/// connected in the stage graph (W061), and refinement must be acyclic
/// (E062).
pub fn validate_events(model: &StaticModel, layer: &EventLayer) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let graph = stage_graph(model);

    for event in &layer.events {
        if event.region.is_empty() {
            diags.push(Diagnostic::error(
                "E022",
                format!("event '{}' has an empty region", event.id),
                event.pos.clone(),
            ));
            continue;
        }
        let mut members: BTreeSet<usize> = BTreeSet::new();
        let mut all_resolved = true;
        for r in &event.region {
            match model.resolve(r) {
                Some(Resolution::Stage { .. }) => {
                    let canonical = model.canonical(r).expect("resolved");
                    if let Some(id) = graph.node_id(&canonical) {
                        members.insert(id);
                    }
                }
                _ => {
                    all_resolved = false;
                    diags.push(Diagnostic::error(
                        "E021",
                        format!("region reference '{r}' is not a stage of the model"),
                        event.pos.clone(),
                    ));
                }
            }
        }
        if all_resolved && !graph.weakly_connected(&members) {
            diags.push(Diagnostic::warning(
                "W061",
                format!(
                    "region of event '{}' is not weakly connected; no connecting flow or trigger joins its stages",
                    event.id
                ),
                event.pos.clone(),
            ));
        }
    }

    // Refinement cycles. Walking parent links from each event either
    // terminates or returns to the starting id; to report each cycle
    // once, only its first member in declaration order speaks.
    for (i, event) in layer.events.iter().enumerate() {
        let mut path = vec![event.id.as_str()];
        let mut cursor = event.refines.as_deref();
        while let Some(parent) = cursor {
            if parent == event.id {
                let first = path
                    .iter()
                    .filter_map(|id| layer.events.iter().position(|e| e.id == *id))
                    .min()
                    .unwrap_or(i);
                if first == i {
                    path.push(parent);
                    diags.push(Diagnostic::error(
                        "E062",
                        format!("refinement cycle: {}", path.join(" -> ")),
                        event.pos.clone(),
                    ));
                }
                break;
            }
            if path.contains(&parent) {
                break; // cycle not through this event; its members report it
            }
            path.push(parent);
            cursor = layer.event(parent).and_then(|e| e.refines.as_deref());
        }
    }

    sort_diagnostics(&mut diags);
    diags
}

/// Checks a behavior graph against its model: start bindings must name
/// stages and guard expressions may only read stores that exist (both
/// E011). Event ids were already checked at parse time against the
/// layer the behavior was written for.
pub fn validate_behavior(model: &StaticModel, behavior: &BehaviorGraph) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for start in &behavior.starts {
        if !matches!(model.resolve(&start.stage), Some(Resolution::Stage { .. })) {
            diags.push(Diagnostic::error(
                "E011",
                format!("start binding references '{}', which is not a stage", start.stage),
                start.pos.clone(),
            ));
        }
    }
    for edge in &behavior.edges {
        let EdgeMode::Guarded(guard) = &edge.mode else { continue };
        for r in guard.store_refs() {
            if !matches!(model.resolve(r), Some(Resolution::Store { .. })) {
                diags.push(Diagnostic::error(
                    "E011",
                    format!("guard on {} -> {} reads '{r}', which is not a store", edge.from, edge.to),
                    edge.pos.clone(),
                ));
            }
        }
    }
    sort_diagnostics(&mut diags);
    diags
}

/// Warns (W070) about every stage no event region covers. Stores are
/// exempt: they are read and written through expressions, not claimed
/// by regions.
pub fn coverage_lint(model: &StaticModel, layer: &EventLayer) -> Vec<Diagnostic> {
    let mut covered: BTreeSet<String> = BTreeSet::new();
    for event in &layer.events {
        for r in &event.region {
            let canonical = model.canonical(r).unwrap_or_else(|| r.clone());
            covered.insert(canonical.to_string());
        }
    }
    let mut diags = Vec::new();
    for (path, res) in model.walk() {
        let Resolution::Stage { stage, .. } = res else { continue };
        if !covered.contains(&path.to_string()) {
            diags.push(Diagnostic::warning(
                "W070",
                format!("stage '{path}' is not covered by any event"),
                stage.pos.clone(),
            ));
        }
    }
    sort_diagnostics(&mut diags);
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_events, parse_model};

    fn two_machine_model() -> StaticModel {
        parse_model(
            "v.tm",
            r#"
            model M {
              thimac A {
                receive take
                process work
                release done
                transfer out
                store tally: number = 0
              }
              thimac B {
                receive take
                create made
              }
              flow A.take -> A.work
              flow A.work -> A.done
              flow A.done -> A.out
              flow A.out -> B.take
            }
            "#,
        )
        .expect("model parses")
    }

    #[test]
    fn clean_model_validates_with_one_isolation_warning() {
        let model = two_machine_model();
        let diags = validate_static(&model);
        // B.made is never wired up.
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "W060");
        assert!(diags[0].message.contains("B.made"));
    }

    #[test]
    fn illegal_flows_are_rejected_by_kind_pair() {
        let model = parse_model(
            "v.tm",
            r#"
            model M {
              thimac A { receive take  create made  process work }
              thimac B { process work }
              flow A.take -> A.made
              flow A.work -> B.work
            }
            "#,
        )
        .expect("parses");
        let diags = validate_static(&model);
        let e050: Vec<&str> =
            diags.iter().filter(|d| d.code == "E050").map(|d| d.message.as_str()).collect();
        assert_eq!(e050.len(), 2);
        assert!(e050[0].contains("receive -> create"));
        assert!(e050[0].contains("within one machine"));
        assert!(e050[1].contains("between machines"));
    }

    #[test]
    fn store_writes_only_from_create_or_process() {
        let model = parse_model(
            "v.tm",
            r#"
            model M {
              thimac A {
                receive take
                process work
                store tally: number = 0
              }
              flow A.take -> A.tally
              flow A.work -> A.tally
            }
            "#,
        )
        .expect("parses");
        let diags = validate_static(&model);
        let e052: Vec<_> = diags.iter().filter(|d| d.code == "E052").collect();
        assert_eq!(e052.len(), 1);
        assert!(e052[0].message.contains("written from a receive stage"));
    }

    #[test]
    fn triggers_must_cross_machines_and_join_stages() {
        let model = parse_model(
            "v.tm",
            r#"
            model M {
              thimac A {
                receive take
                process work
                store tally: number = 0
              }
              thimac B { create made }
              flow A.take -> A.work
              trigger A.take ~> A.work
              trigger A.work ~> B.made
              trigger A.work ~> A.tally
            }
            "#,
        )
        .expect("parses");
        let diags = validate_static(&model);
        let codes: Vec<&str> = diags.iter().map(|d| d.code).collect();
        assert!(codes.contains(&"E051"));
        assert!(codes.contains(&"E050"));
        assert_eq!(diags.iter().filter(|d| d.severity == crate::diag::Severity::Error).count(), 2);
    }

    #[test]
    fn disconnected_regions_warn_and_cycles_error() {
        let model = two_machine_model();
        let layer = parse_events(
            "v.tme",
            r#"
            events for M {
              event E1 over { A.take, A.work }
              event E2 over { A.take, B.made }
              event E3 refines E4 over { A.done }
              event E4 refines E3 over { A.out }
            }
            "#,
            &model,
        )
        .expect("events parse");
        let diags = validate_events(&model, &layer);
        let codes: Vec<&str> = diags.iter().map(|d| d.code).collect();
        assert_eq!(codes, ["W061", "E062"]);
        assert!(diags[0].message.contains("event 'E2'"));
        assert!(diags[1].message.contains("E3 -> E4 -> E3"));
    }

    #[test]
    fn self_refinement_is_a_cycle() {
        let model = two_machine_model();
        let layer = parse_events(
            "v.tme",
            "events for M { event E1 refines E1 over { A.take } }",
            &model,
        )
        .expect("events parse");
        let diags = validate_events(&model, &layer);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "E062");
        assert!(diags[0].message.contains("E1 -> E1"));
    }

    #[test]
    fn uncovered_stages_are_listed_in_declaration_order() {
        let model = two_machine_model();
        let layer = parse_events(
            "v.tme",
            "events for M { event E1 over { A.take, A.work } }",
            &model,
        )
        .expect("events parse");
        let diags = coverage_lint(&model, &layer);
        let names: Vec<&str> = diags.iter().map(|d| d.message.as_str()).collect();
        assert_eq!(diags.iter().filter(|d| d.code == "W070").count(), 4);
        assert!(names[0].contains("A.done"));
        assert!(names[1].contains("A.out"));
        assert!(names[2].contains("B.take"));
        assert!(names[3].contains("B.made"));
    }

    #[test]
    fn behavior_guards_and_starts_resolve_against_the_model() {
        let model = two_machine_model();
        let layer = parse_events(
            "v.tme",
            "events for M { event E1 over { A.take } event E2 over { A.work } }",
            &model,
        )
        .expect("events parse");
        let behavior = crate::dsl::parse_behavior(
            "v.tmb",
            r#"
            behavior for M {
              start E1 on A.nowhere
              E1 -> E2 when A.missing == 1
            }
            "#,
            &layer,
        )
        .expect("behavior parses");
        let diags = validate_behavior(&model, &behavior);
        let codes: Vec<&str> = diags.iter().map(|d| d.code).collect();
        assert_eq!(codes, ["E011", "E011"]);
        assert!(diags[0].message.contains("A.nowhere"));
        assert!(diags[1].message.contains("A.missing"));
    }
}
