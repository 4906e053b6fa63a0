//! Turn every occurrence of a run into a record by monitoring all
//! events, then show that the record store mirrors the trace.
//!
//! ```bash
//! cargo run -p tmkit --example monitor_everything
//! ```

use tmkit::dsl::{parse_behavior, parse_events, parse_model, parse_scenario};
use tmkit::engine::{run, EngineOptions};
use tmkit::temporal::{record_line, MonitorSpec};

fn source(name: &str) -> String {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).expect("corpus file")
}

fn main() {
    let model = parse_model("flower.tm", &source("flower.tm")).expect("model parses");
    let layer = parse_events("flower.tme", &source("flower.tme"), &model).expect("events parse");
    let behavior =
        parse_behavior("flower.tmb", &source("flower.tmb"), &layer).expect("behavior parses");
    let scenario = parse_scenario("flower_onebid.tms", &source("flower_onebid.tms"), &model)
        .expect("scenario parses");

    let options =
        EngineOptions { monitor: Some(MonitorSpec::All), ..EngineOptions::default() };
    let output =
        run(&model, &layer, &behavior, &scenario, &options).expect("run succeeds");

    assert_eq!(output.records.len(), output.trace.occurrences.len());
    println!(
        "{} occurrences became {} records:",
        output.trace.occurrences.len(),
        output.records.len(),
    );
    for record in output.records.records() {
        println!("{}", record_line(record));
    }
}
