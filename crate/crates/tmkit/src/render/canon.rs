//! Canonical source renderers: parsed values printed back as normalized
//! text. Numbers use their compact spelling, references their resolved
//! dotted paths, and members a fixed order (stages, stores, children),
//! so the output is a fixed point of render-then-parse.

use std::fmt::Write;

use crate::dynamics::{BehaviorGraph, EdgeMode, EventLayer, PayloadSrc};
use crate::engine::Scenario;
use crate::model::expr::escape_text;
use crate::model::{StaticModel, Thimac, Value};
use crate::temporal::MonitorSpec;

fn dsl_text(t: &str) -> String {
    format!("\"{}\"", escape_text(t))
}

fn dsl_value(v: &Value) -> String {
    match v {
        Value::Number(n) => n.compact(),
        Value::Text(t) => dsl_text(t),
        Value::Bool(b) => b.to_string(),
    }
}

/// Prints a model as canonical `.tm` source.
pub fn render_model(model: &StaticModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {} {{", model.name);
    for root in &model.roots {
        thimac_block(&mut out, root, 1);
    }
    if !model.flows.is_empty() || !model.triggers.is_empty() {
        out.push('\n');
    }
    for flow in &model.flows {
        let _ = writeln!(out, "  flow {} -> {}", flow.from, flow.to);
    }
    for trigger in &model.triggers {
        let _ = writeln!(out, "  trigger {} ~> {}", trigger.from, trigger.to);
    }
    out.push_str("}\n");
    out
}

fn thimac_block(out: &mut String, thimac: &Thimac, depth: usize) {
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}thimac {} {{", thimac.name);
    for stage in &thimac.stages {
        let _ = write!(out, "{pad}  {} {}", stage.kind, stage.name);
        if let Some(assignment) = &stage.assignment {
            let _ = write!(out, " = {}", assignment.expr);
            if let Some(into) = &assignment.into {
                let _ = write!(out, " into {into}");
            }
        }
        if let Some(label) = &stage.label {
            let _ = write!(out, " {}", dsl_text(label));
        }
        out.push('\n');
    }
    for store in &thimac.stores {
        let _ = writeln!(
            out,
            "{pad}  store {}: {} = {}",
            store.name,
            store.value_kind.keyword(),
            dsl_value(&store.initial)
        );
    }
    for child in &thimac.children {
        thimac_block(out, child, depth + 1);
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Prints an event layer as canonical `.tme` source.
pub fn render_events(layer: &EventLayer) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "events for {} {{", layer.model_name);
    for event in &layer.events {
        let _ = write!(out, "  event {}", event.id);
        if let Some(parent) = &event.refines {
            let _ = write!(out, " refines {parent}");
        }
        let region: Vec<String> = event.region.iter().map(|r| r.to_string()).collect();
        let _ = write!(out, " over {{ {} }}", region.join(", "));
        if !event.duration.is_zero() {
            let _ = write!(out, " lasts {}", event.duration.compact());
        }
        if !event.payload_spec.is_empty() {
            let fields: Vec<String> = event
                .payload_spec
                .iter()
                .map(|(name, src)| match src {
                    PayloadSrc::Field(f) => format!("{name}: ${f}"),
                    PayloadSrc::Store(r) => format!("{name}: {r}"),
                })
                .collect();
            let _ = write!(out, " payload {{ {} }}", fields.join(", "));
        }
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Prints a behavior graph as canonical `.tmb` source. The graph keeps
/// no model name of its own, so the caller supplies the `for` clause.
pub fn render_behavior(behavior: &BehaviorGraph, model_name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "behavior for {model_name} {{");
    for start in &behavior.starts {
        let _ = writeln!(out, "  start {} on {}", start.event, start.stage);
    }
    for edge in &behavior.edges {
        let _ = write!(out, "  {} -> {}", edge.from, edge.to);
        match &edge.mode {
            EdgeMode::Immediate => {}
            EdgeMode::Guarded(guard) => {
                let _ = write!(out, " when {guard}");
            }
            EdgeMode::Timed(delay) => {
                let _ = write!(out, " after {}", delay.compact());
            }
        }
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Prints a scenario as canonical `.tms` source.
pub fn render_scenario(scenario: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {} for {} {{", scenario.name, scenario.model_name);
    for stimulus in &scenario.stimuli {
        let fields: Vec<String> =
            stimulus.fields.iter().map(|(n, v)| format!("{n} = {}", dsl_value(v))).collect();
        let block = if fields.is_empty() { "{ }".to_string() } else { format!("{{ {} }}", fields.join(", ")) };
        let _ = write!(out, "  at {}: inject {} {}", stimulus.at.compact(), stimulus.target, block);
        if let Some(urgency) = &stimulus.urgency {
            let _ = write!(out, " urgency {}", dsl_text(urgency));
        }
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Prints a monitor spec as canonical `.tmm` source.
pub fn render_monitor(spec: &MonitorSpec) -> String {
    match spec {
        MonitorSpec::All => "monitor all\n".to_string(),
        MonitorSpec::Selective(selections) => {
            let mut out = String::new();
            for s in selections {
                let _ = writeln!(
                    out,
                    "monitor {} on {{ {} }} capture {{ {} }}",
                    dsl_text(&s.key_template),
                    s.events.join(", "),
                    s.captures.join(", ")
                );
            }
            out
        }
    }
}
