//! Deterministic discrete-event executor. Consumes a scenario's stimuli,
//! fires events along the behavior graph, evaluates stage assignments
//! over stores, and emits a trace of occurrences (plus temporal records
//! when a monitor is attached).
//!
//! Determinism contract: the pending queue is ordered by (time, insertion
//! counter); equal-time items run in insertion order, so identical inputs
//! replay to byte-identical traces.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use crate::decimal::Decimal;
use crate::diag::{Diagnostic, SourcePos};
use crate::dynamics::{enabled_successors, region_subgraph, BehaviorGraph, EventLayer, PayloadSrc};
use crate::model::{stage_graph, Expr, QualifiedRef, Resolution, StaticModel, Value};
use crate::temporal::{meta_record, MonitorSpec, TemporalStore};

/// Current store values, keyed by canonical store path.
pub type StoreState = BTreeMap<String, Value>;

/// One external input: at time `at`, a thing arrives at `target` (a
/// transfer stage) carrying named fields.
#[derive(Clone, PartialEq, Debug)]
pub struct Stimulus {
    pub at: Decimal,
    pub target: QualifiedRef,
    pub fields: Vec<(String, Value)>,
    pub urgency: Option<String>,
    pub pos: SourcePos,
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct Scenario {
    pub name: String,
    pub model_name: String,
    pub stimuli: Vec<Stimulus>,
}

/// Why an occurrence fired: an external stimulus (by index into the
/// scenario) or a predecessor occurrence (by seq).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Cause {
    Stimulus(usize),
    Predecessor(usize),
}

/// One firing of an event.
#[derive(Clone, PartialEq, Debug)]
pub struct Occurrence {
    pub seq: usize,
    pub event: String,
    pub valid_start: Decimal,
    pub valid_end: Decimal,
    pub duration: Decimal,
    /// Captured payload, in payload-spec declaration order.
    pub payload: Vec<(String, Value)>,
    pub urgency: Option<String>,
    pub cause: Cause,
}

/// The full result of a run.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Trace {
    pub occurrences: Vec<Occurrence>,
    pub final_stores: StoreState,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    /// Hard stop against accidental behavior-graph cycles.
    pub max_occurrences: usize,
    pub monitor: Option<MonitorSpec>,
}

impl Default for EngineOptions {
    fn default() -> EngineOptions {
        EngineOptions { max_occurrences: 10_000, monitor: None }
    }
}

/// A run's outputs: the trace and whatever the monitor recorded.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct RunOutput {
    pub trace: Trace,
    pub records: TemporalStore,
}

/// Errors that abort a run. Codes are stable and map to CLI exit 3.
#[derive(Clone, PartialEq, Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error("{pos}: error R100 occurrence limit {limit} exceeded (possible behavior cycle)")]
    OccurrenceLimit { limit: usize, pos: SourcePos },
    #[error("{pos}: error R101 {what}: {detail}")]
    Eval { what: String, detail: String, pos: SourcePos },
    #[error("{pos}: error T200 {message}")]
    Monitor { message: String, pos: SourcePos },
}

impl RuntimeError {
    pub fn code(&self) -> &'static str {
        match self {
            RuntimeError::OccurrenceLimit { .. } => "R100",
            RuntimeError::Eval { .. } => "R101",
            RuntimeError::Monitor { .. } => "T200",
        }
    }
}

/// What expressions evaluate against: named fields (stimulus fields for
/// assignments and payload capture, occurrence payload for guards) plus
/// the current stores.
pub struct EvalContext<'a> {
    pub fields: &'a [(String, Value)],
    pub stores: &'a StoreState,
}

impl<'a> EvalContext<'a> {
    pub fn field(&self, name: &str) -> Option<&Value> {
        self.fields.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }
}

/// Evaluates an expression. Store refs must already be canonical paths.
/// Errors return the human-readable detail only; callers wrap them into
/// [`RuntimeError::Eval`] with a position.
pub fn eval_expr(expr: &Expr, ctx: &EvalContext) -> Result<Value, String> {
    use crate::model::BinOp;
    match expr {
        Expr::Number(n) => Ok(Value::Number(*n)),
        Expr::Text(t) => Ok(Value::Text(t.clone())),
        Expr::Field(name) => {
            ctx.field(name).cloned().ok_or_else(|| format!("no field named '${name}'"))
        }
        Expr::Store(path) => ctx
            .stores
            .get(&path.to_string())
            .cloned()
            .ok_or_else(|| format!("no store named '{path}'")),
        Expr::Binary { op, lhs, rhs } => {
            let a = eval_expr(lhs, ctx)?;
            let b = eval_expr(rhs, ctx)?;
            match op {
                BinOp::Add | BinOp::Sub => {
                    let (Value::Number(x), Value::Number(y)) = (&a, &b) else {
                        return Err(format!(
                            "'{op}' needs numbers, got {} and {}",
                            a.kind_name(),
                            b.kind_name()
                        ));
                    };
                    let result = if *op == BinOp::Add { x.checked_add(*y) } else { x.checked_sub(*y) };
                    result.map(Value::Number).ok_or_else(|| "number out of range".to_string())
                }
                BinOp::Eq | BinOp::Ne => {
                    let equal = match (&a, &b) {
                        (Value::Number(x), Value::Number(y)) => x == y,
                        (Value::Text(x), Value::Text(y)) => x == y,
                        (Value::Bool(x), Value::Bool(y)) => x == y,
                        _ => {
                            return Err(format!(
                                "'{op}' compares mismatched kinds {} and {}",
                                a.kind_name(),
                                b.kind_name()
                            ))
                        }
                    };
                    Ok(Value::Bool(if *op == BinOp::Eq { equal } else { !equal }))
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    let (Value::Number(x), Value::Number(y)) = (&a, &b) else {
                        return Err(format!(
                            "'{op}' needs numbers, got {} and {}",
                            a.kind_name(),
                            b.kind_name()
                        ));
                    };
                    Ok(Value::Bool(match op {
                        BinOp::Lt => x < y,
                        BinOp::Le => x <= y,
                        BinOp::Gt => x > y,
                        _ => x >= y,
                    }))
                }
                BinOp::And | BinOp::Or => {
                    let (Value::Bool(x), Value::Bool(y)) = (&a, &b) else {
                        return Err(format!(
                            "'{op}' needs booleans, got {} and {}",
                            a.kind_name(),
                            b.kind_name()
                        ));
                    };
                    Ok(Value::Bool(if *op == BinOp::And { *x && *y } else { *x || *y }))
                }
            }
        }
    }
}

/// Rewrites every reference in the behavior graph to its canonical form
/// against `model`: start-binding stages and store refs inside guards.
/// The behavior parser cannot do this itself (it never sees the model).
/// Idempotent; refs that do not resolve are left as written so that
/// validation can report them.
pub fn prepare_behavior(model: &StaticModel, graph: &mut BehaviorGraph) {
    for start in &mut graph.starts {
        if let Some(canon) = model.canonical(&start.stage) {
            start.stage = canon;
        }
    }
    for edge in &mut graph.edges {
        if let crate::dynamics::EdgeMode::Guarded(guard) = &mut edge.mode {
            canonicalize_expr(model, guard);
        }
    }
}

pub(crate) fn canonicalize_expr(model: &StaticModel, expr: &mut Expr) {
    match expr {
        Expr::Store(path) => {
            if let Some(canon) = model.canonical(path) {
                *path = canon;
            }
        }
        Expr::Binary { lhs, rhs, .. } => {
            canonicalize_expr(model, lhs);
            canonicalize_expr(model, rhs);
        }
        Expr::Number(_) | Expr::Text(_) | Expr::Field(_) => {}
    }
}

/// Executes one event at `clock`: runs the assignments of its region
/// stages in topological order (store writes apply immediately), then
/// captures the payload, then assembles the occurrence. `fields` are the
/// originating stimulus's fields.
#[allow(clippy::too_many_arguments)]
fn execute_event(
    event: &crate::dynamics::Event,
    model: &StaticModel,
    graph: &crate::model::StageGraph,
    fields: &[(String, Value)],
    stores: &mut StoreState,
    clock: Decimal,
    seq: usize,
    urgency: Option<String>,
    cause: Cause,
) -> Result<Occurrence, RuntimeError> {
    let sub = region_subgraph(event, model, graph);
    let members = sub.nodes.iter().copied().collect();
    for node in graph.topo_order(&members) {
        let path = &graph.nodes[node];
        let Some(Resolution::Stage { stage, .. }) = model.resolve(path) else { continue };
        let Some(assignment) = &stage.assignment else { continue };
        let value = eval_expr(&assignment.expr, &EvalContext { fields, stores }).map_err(|detail| {
            RuntimeError::Eval {
                what: format!("assignment on stage {path}"),
                detail,
                pos: stage.pos.clone(),
            }
        })?;
        let Some(into) = &assignment.into else { continue };
        let key = into.to_string();
        let old = stores.get(&key).ok_or_else(|| RuntimeError::Eval {
            what: format!("assignment on stage {path}"),
            detail: format!("no store named '{into}'"),
            pos: stage.pos.clone(),
        })?;
        if old.kind_name() != value.kind_name() {
            return Err(RuntimeError::Eval {
                what: format!("assignment on stage {path}"),
                detail: format!(
                    "store '{into}' holds {}, assignment produced {}",
                    old.kind_name(),
                    value.kind_name()
                ),
                pos: stage.pos.clone(),
            });
        }
        stores.insert(key, value);
    }

    let mut payload = Vec::with_capacity(event.payload_spec.len());
    for (name, src) in &event.payload_spec {
        let value = match src {
            PayloadSrc::Field(field) => {
                EvalContext { fields, stores }.field(field).cloned().ok_or_else(|| {
                    RuntimeError::Eval {
                        what: format!("payload capture '{name}' of event {}", event.id),
                        detail: format!("no field named '${field}'"),
                        pos: event.pos.clone(),
                    }
                })?
            }
            PayloadSrc::Store(path) => {
                stores.get(&path.to_string()).cloned().ok_or_else(|| RuntimeError::Eval {
                    what: format!("payload capture '{name}' of event {}", event.id),
                    detail: format!("no store named '{path}'"),
                    pos: event.pos.clone(),
                })?
            }
        };
        payload.push((name.clone(), value));
    }

    let valid_end = clock.checked_add(event.duration).ok_or_else(|| RuntimeError::Eval {
        what: format!("event {}", event.id),
        detail: "event end time overflows the clock".into(),
        pos: event.pos.clone(),
    })?;
    Ok(Occurrence {
        seq,
        event: event.id.clone(),
        valid_start: clock,
        valid_end,
        duration: event.duration,
        payload,
        urgency,
        cause,
    })
}

/// One pending queue entry. `Reverse` ordering on (time, counter) turns
/// the max-heap into the required min-heap; the counter is unique, so
/// the derived ordering on this enum itself is never consulted.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Pending {
    /// Deliver scenario stimulus `index`.
    Stimulus(usize),
    /// Fire `event`, propagating its originating stimulus.
    Fire { event: String, stimulus: usize, cause: Cause },
}

/// Runs a scenario to completion. Inputs are assumed validated; the
/// behavior graph is canonicalized internally (see [`prepare_behavior`]).
pub fn run(
    model: &StaticModel,
    layer: &EventLayer,
    behavior: &BehaviorGraph,
    scenario: &Scenario,
    options: &EngineOptions,
) -> Result<RunOutput, RuntimeError> {
    let mut behavior = behavior.clone();
    prepare_behavior(model, &mut behavior);
    let graph = stage_graph(model);

    let mut queue: BinaryHeap<Reverse<(Decimal, u64, Pending)>> = BinaryHeap::new();
    let mut counter = 0u64;
    for (i, stimulus) in scenario.stimuli.iter().enumerate() {
        queue.push(Reverse((stimulus.at, counter, Pending::Stimulus(i))));
        counter += 1;
    }

    let mut trace = Trace {
        occurrences: Vec::new(),
        final_stores: model.initial_stores(),
        warnings: Vec::new(),
    };
    let mut records = TemporalStore::default();

    while let Some(Reverse((time, _, item))) = queue.pop() {
        match item {
            Pending::Stimulus(index) => {
                let stimulus = &scenario.stimuli[index];
                let target =
                    model.canonical(&stimulus.target).unwrap_or_else(|| stimulus.target.clone());
                match behavior.start_for(&target) {
                    Some(binding) => {
                        queue.push(Reverse((
                            time,
                            counter,
                            Pending::Fire {
                                event: binding.event.clone(),
                                stimulus: index,
                                cause: Cause::Stimulus(index),
                            },
                        )));
                        counter += 1;
                    }
                    None => trace.warnings.push(Diagnostic::warning(
                        "W081",
                        format!("stimulus targets {target}, which starts no event"),
                        stimulus.pos.clone(),
                    )),
                }
            }
            Pending::Fire { event, stimulus, cause } => {
                let Some(event) = layer.event(&event) else { continue };
                if trace.occurrences.len() >= options.max_occurrences {
                    return Err(RuntimeError::OccurrenceLimit {
                        limit: options.max_occurrences,
                        pos: event.pos.clone(),
                    });
                }
                let source = &scenario.stimuli[stimulus];
                let occ = execute_event(
                    event,
                    model,
                    &graph,
                    &source.fields,
                    &mut trace.final_stores,
                    time,
                    trace.occurrences.len(),
                    source.urgency.clone(),
                    cause,
                )?;
                if let Some(spec) = &options.monitor {
                    for record in meta_record(&occ, spec)? {
                        records.append(record);
                    }
                }
                let successors = enabled_successors(&behavior, &occ, &trace.final_stores)?;
                let has_edges = behavior.edges_from(&occ.event).next().is_some();
                if successors.is_empty() && has_edges {
                    trace.warnings.push(Diagnostic::warning(
                        "W080",
                        format!(
                            "occurrence {} of event {} matched no successor edge",
                            occ.seq, occ.event
                        ),
                        event.pos.clone(),
                    ));
                }
                let seq = occ.seq;
                trace.occurrences.push(occ);
                for (next, at) in successors {
                    queue.push(Reverse((
                        at,
                        counter,
                        Pending::Fire { event: next, stimulus, cause: Cause::Predecessor(seq) },
                    )));
                    counter += 1;
                }
            }
        }
    }
    Ok(RunOutput { trace, records })
}

/// Renders one occurrence as a trace line:
/// `seq|event|valid_start|valid_end|duration|payload|urgency|cause`.
/// Payload entries are `name=value` joined by commas; absent urgency is
/// `-`; cause is `stimulus:N` or `pred:N`.
pub fn trace_line(occ: &Occurrence) -> String {
    let mut line = String::new();
    let _ = write!(
        line,
        "{}|{}|{}|{}|{}|",
        occ.seq, occ.event, occ.valid_start, occ.valid_end, occ.duration
    );
    line.push_str(&render_payload(&occ.payload));
    line.push('|');
    match &occ.urgency {
        Some(u) => {
            let _ = write!(line, "\"{}\"", crate::model::expr::escape_text(u));
        }
        None => line.push('-'),
    }
    match occ.cause {
        Cause::Stimulus(i) => {
            let _ = write!(line, "|stimulus:{i}");
        }
        Cause::Predecessor(s) => {
            let _ = write!(line, "|pred:{s}");
        }
    }
    line
}

/// Renders a whole trace, one line per occurrence, trailing newline.
pub fn render_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for occ in &trace.occurrences {
        out.push_str(&trace_line(occ));
        out.push('\n');
    }
    out
}

pub(crate) fn render_payload(payload: &[(String, Value)]) -> String {
    let mut out = String::new();
    for (i, (name, value)) in payload.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{name}={}", value.render_record());
    }
    out
}
