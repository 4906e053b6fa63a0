//! Command-line driver: `tm check`, `tm render`, `tm sim`, `tm query`.
//!
//! Exit codes: 0 clean, 1 diagnostics with errors, 2 usage or file
//! problems, 3 runtime failures during simulation. Diagnostics go to
//! stderr as `file:line:col: severity CODE message`; data outputs go
//! to stdout or the requested output files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::decimal::Decimal;
use crate::diag::{has_errors, sort_diagnostics, Diagnostic, SourcePos};
use crate::dsl::{parse_behavior, parse_events, parse_model, parse_monitor, parse_scenario};
use crate::dynamics::{BehaviorGraph, EventLayer};
use crate::engine::{self, render_trace, EngineOptions, Scenario};
use crate::model::StaticModel;
use crate::render::{dot_behavior, dot_events, dot_static};
use crate::temporal::{parse_records, record_line, render_records, MonitorSpec, TemporalStore};
use crate::validate::{coverage_lint, validate_behavior, validate_events, validate_static};

const DIAG_ERROR: i32 = 1;
const USAGE: i32 = 2;
const RUNTIME: i32 = 3;

#[derive(Parser)]
#[command(name = "tm", version, about = "Model, simulate, and query thinging machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum View {
    Static,
    Events,
    Behavior,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate source files together; writes nothing
    Check {
        /// Files to check (.tm, .tme, .tmb, .tms, .tmm), at most one of each kind
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Emit a Graphviz DOT view
    Render {
        /// Which view to draw
        #[arg(long, value_enum)]
        view: View,
        /// Model file (.tm)
        #[arg(long)]
        model: PathBuf,
        /// Event layer (.tme); required for the events and behavior views
        #[arg(long)]
        events: Option<PathBuf>,
        /// Behavior graph (.tmb); required for the behavior view
        #[arg(long)]
        behavior: Option<PathBuf>,
        /// Shade only this event's region in the events view
        #[arg(long)]
        event: Option<String>,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario and record what happened
    Sim {
        /// Model file (.tm)
        #[arg(long)]
        model: PathBuf,
        /// Event layer (.tme)
        #[arg(long)]
        events: PathBuf,
        /// Behavior graph (.tmb)
        #[arg(long)]
        behavior: PathBuf,
        /// Scenario to run (.tms)
        #[arg(long)]
        scenario: PathBuf,
        /// Monitor spec (.tmm) choosing which occurrences become records
        #[arg(long, conflicts_with = "monitor_all")]
        monitor: Option<PathBuf>,
        /// Record every occurrence under its event id
        #[arg(long)]
        monitor_all: bool,
        /// Write temporal records here (.tdb)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the occurrence trace here
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Abort after this many occurrences
        #[arg(long, default_value_t = 10_000)]
        max_occurrences: usize,
    },
    /// Query a record store written by sim
    Query {
        /// Record store to read (.tdb)
        #[arg(long)]
        db: PathBuf,
        /// Record key, e.g. A1.balance; required except with --snapshot
        #[arg(long)]
        key: Option<String>,
        /// Latest record for the key whose valid time starts at or before this instant
        #[arg(long, value_parser = parse_instant)]
        as_of: Option<Decimal>,
        /// Every record for the key, oldest first
        #[arg(long)]
        history: bool,
        /// Records for the key written at or before this transaction sequence
        #[arg(long)]
        as_known: Option<i64>,
        /// One as-of answer per distinct key at this instant
        #[arg(long, value_parser = parse_instant)]
        snapshot: Option<Decimal>,
    },
}

fn parse_instant(s: &str) -> Result<Decimal, String> {
    s.parse::<Decimal>().map_err(|e| e.to_string())
}

/// Parses the process arguments and runs the chosen subcommand,
/// returning the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Check { files } => check(&files),
        Command::Render { view, model, events, behavior, event, out } => render(
            view,
            &model,
            events.as_deref(),
            behavior.as_deref(),
            event.as_deref(),
            out.as_deref(),
        ),
        Command::Sim {
            model,
            events,
            behavior,
            scenario,
            monitor,
            monitor_all,
            out,
            trace,
            max_occurrences,
        } => sim(
            &model,
            &events,
            &behavior,
            &scenario,
            monitor.as_deref(),
            monitor_all,
            out.as_deref(),
            trace.as_deref(),
            max_occurrences,
        ),
        Command::Query { db, key, as_of, history, as_known, snapshot } => {
            query(&db, key.as_deref(), as_of, history, as_known, snapshot)
        }
    };
    match outcome {
        Ok(code) | Err(code) => code,
    }
}

fn fail_usage(message: &str) -> i32 {
    eprintln!("tm: {message}");
    USAGE
}

fn report(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn read(path: &Path) -> Result<(String, String), i32> {
    let name = path.display().to_string();
    match fs::read_to_string(path) {
        Ok(text) => Ok((name, text)),
        Err(err) => Err(fail_usage(&format!("cannot read {name}: {err}"))),
    }
}

fn write_output(path: &Path, content: &str) -> Result<(), i32> {
    fs::write(path, content)
        .map_err(|err| fail_usage(&format!("cannot write {}: {err}", path.display())))
}

/// Lifts a parse result into the exit-code world, printing its
/// diagnostics on failure.
fn parsed<T>(result: Result<T, Vec<Diagnostic>>) -> Result<T, i32> {
    result.map_err(|diags| {
        report(&diags);
        DIAG_ERROR
    })
}

fn load_model(path: &Path) -> Result<StaticModel, i32> {
    let (name, text) = read(path)?;
    parsed(parse_model(&name, &text))
}

fn load_events(path: &Path, model: &StaticModel) -> Result<EventLayer, i32> {
    let (name, text) = read(path)?;
    parsed(parse_events(&name, &text, model))
}

fn load_behavior(path: &Path, layer: &EventLayer) -> Result<BehaviorGraph, i32> {
    let (name, text) = read(path)?;
    parsed(parse_behavior(&name, &text, layer))
}

fn load_scenario(path: &Path, model: &StaticModel) -> Result<Scenario, i32> {
    let (name, text) = read(path)?;
    parsed(parse_scenario(&name, &text, model))
}

fn load_monitor(path: &Path, layer: &EventLayer) -> Result<MonitorSpec, i32> {
    let (name, text) = read(path)?;
    parsed(parse_monitor(&name, &text, layer))
}

const FILE_KINDS: [&str; 5] = ["tm", "tme", "tmb", "tms", "tmm"];

/// `tm check`: parses every given file in dependency order (model,
/// then events, then behavior/scenario/monitor) and runs all static
/// validation. A parse failure stops there; semantic diagnostics from
/// all files are pooled, sorted, and printed together.
fn check(files: &[PathBuf]) -> Result<i32, i32> {
    let mut by_kind: [Option<&PathBuf>; 5] = [None; 5];
    for file in files {
        let ext = file.extension().and_then(|e| e.to_str()).unwrap_or("");
        let Some(slot) = FILE_KINDS.iter().position(|k| *k == ext) else {
            return Err(fail_usage(&format!(
                "{}: unknown file kind; expected one of .tm .tme .tmb .tms .tmm",
                file.display()
            )));
        };
        if by_kind[slot].is_some() {
            return Err(fail_usage(&format!("more than one .{} file given", FILE_KINDS[slot])));
        }
        by_kind[slot] = Some(file);
    }
    let [model_file, events_file, behavior_file, scenario_file, monitor_file] = by_kind;
    let missing = |dependent: &Path, wanted: &str| {
        fail_usage(&format!(
            "checking {} needs the {wanted} file it builds on; add it to the command line",
            dependent.display()
        ))
    };

    let Some(model_file) = model_file else {
        return Err(missing(&files[0], "model (.tm)"));
    };
    let model = load_model(model_file)?;
    let mut diags = validate_static(&model);

    let layer = match events_file {
        Some(path) => Some(load_events(path, &model)?),
        None => None,
    };
    if let Some(layer) = &layer {
        diags.extend(validate_events(&model, layer));
        diags.extend(coverage_lint(&model, layer));
    }

    if let Some(path) = behavior_file {
        let Some(layer) = &layer else {
            return Err(missing(path, "event layer (.tme)"));
        };
        let behavior = load_behavior(path, layer)?;
        diags.extend(validate_behavior(&model, &behavior));
    }
    if let Some(path) = scenario_file {
        load_scenario(path, &model)?;
    }
    if let Some(path) = monitor_file {
        let Some(layer) = &layer else {
            return Err(missing(path, "event layer (.tme)"));
        };
        load_monitor(path, layer)?;
    }

    sort_diagnostics(&mut diags);
    report(&diags);
    Ok(if has_errors(&diags) { DIAG_ERROR } else { 0 })
}

/// `tm render`: draws one DOT view. Rendering only needs the files to
/// parse; structural warnings do not block a picture.
fn render(
    view: View,
    model_path: &Path,
    events_path: Option<&Path>,
    behavior_path: Option<&Path>,
    event: Option<&str>,
    out: Option<&Path>,
) -> Result<i32, i32> {
    if event.is_some() && view != View::Events {
        return Err(fail_usage("--event only applies to --view events"));
    }
    let model = load_model(model_path)?;
    let dot = match view {
        View::Static => dot_static(&model),
        View::Events => {
            let Some(events_path) = events_path else {
                return Err(fail_usage("--view events needs --events"));
            };
            let layer = load_events(events_path, &model)?;
            if let Some(id) = event {
                if layer.event(id).is_none() {
                    let pos = SourcePos::new(events_path.display().to_string(), 1, 1);
                    report(&[Diagnostic::error(
                        "E030",
                        format!("unknown event '{id}'"),
                        pos,
                    )]);
                    return Err(DIAG_ERROR);
                }
            }
            dot_events(&model, &layer, event)
        }
        View::Behavior => {
            let (Some(events_path), Some(behavior_path)) = (events_path, behavior_path) else {
                return Err(fail_usage("--view behavior needs --events and --behavior"));
            };
            let layer = load_events(events_path, &model)?;
            let behavior = load_behavior(behavior_path, &layer)?;
            dot_behavior(&layer, &behavior)
        }
    };
    match out {
        Some(path) => write_output(path, &dot)?,
        None => print!("{dot}"),
    }
    Ok(0)
}

/// `tm sim`: validates the stack, runs the scenario, then writes the
/// requested outputs. Runtime warnings go to stderr; a one-line
/// summary goes to stdout.
#[allow(clippy::too_many_arguments)]
fn sim(
    model_path: &Path,
    events_path: &Path,
    behavior_path: &Path,
    scenario_path: &Path,
    monitor_path: Option<&Path>,
    monitor_all: bool,
    out: Option<&Path>,
    trace_path: Option<&Path>,
    max_occurrences: usize,
) -> Result<i32, i32> {
    let model = load_model(model_path)?;
    let layer = load_events(events_path, &model)?;
    let behavior = load_behavior(behavior_path, &layer)?;
    let scenario = load_scenario(scenario_path, &model)?;
    let monitor = match monitor_path {
        Some(path) => Some(load_monitor(path, &layer)?),
        None if monitor_all => Some(MonitorSpec::All),
        None => None,
    };

    let mut diags = validate_static(&model);
    diags.extend(validate_events(&model, &layer));
    diags.extend(validate_behavior(&model, &behavior));
    sort_diagnostics(&mut diags);
    report(&diags);
    if has_errors(&diags) {
        return Err(DIAG_ERROR);
    }

    let options = EngineOptions { max_occurrences, monitor };
    let output = match engine::run(&model, &layer, &behavior, &scenario, &options) {
        Ok(output) => output,
        Err(err) => {
            eprintln!("{err}");
            return Err(RUNTIME);
        }
    };
    report(&output.trace.warnings);

    if let Some(path) = trace_path {
        write_output(path, &render_trace(&output.trace))?;
    }
    if let Some(path) = out {
        write_output(path, &render_records(&output.records))?;
    }
    println!(
        "{}: {} occurrences, {} records",
        scenario.name,
        output.trace.occurrences.len(),
        output.records.len()
    );
    Ok(0)
}

/// `tm query`: answers exactly one bitemporal question against a
/// record store. Matching records print one per line; no match prints
/// nothing and still exits 0.
fn query(
    db: &Path,
    key: Option<&str>,
    as_of: Option<Decimal>,
    history: bool,
    as_known: Option<i64>,
    snapshot: Option<Decimal>,
) -> Result<i32, i32> {
    let modes =
        [as_of.is_some(), history, as_known.is_some(), snapshot.is_some()].iter().filter(|m| **m).count();
    if modes != 1 {
        return Err(fail_usage(
            "pick exactly one of --as-of, --history, --as-known, --snapshot",
        ));
    }
    let store = load_store(db)?;

    if let Some(t) = snapshot {
        let keys: Vec<String> = store.keys().iter().map(|k| k.to_string()).collect();
        for key in keys {
            if let Some(record) = store.as_of(&key, t) {
                println!("{}", record_line(record));
            }
        }
        return Ok(0);
    }

    let Some(key) = key else {
        return Err(fail_usage("--key is required except with --snapshot"));
    };
    if let Some(t) = as_of {
        if let Some(record) = store.as_of(key, t) {
            println!("{}", record_line(record));
        }
    } else if history {
        for record in store.history(key) {
            println!("{}", record_line(record));
        }
    } else if let Some(txn) = as_known {
        for record in store.as_known_at(key, txn) {
            println!("{}", record_line(record));
        }
    }
    Ok(0)
}

fn load_store(db: &Path) -> Result<TemporalStore, i32> {
    let (name, text) = read(db)?;
    parse_records(&text).map_err(|err| {
        eprintln!("tm: {name}: {err}");
        DIAG_ERROR
    })
}
