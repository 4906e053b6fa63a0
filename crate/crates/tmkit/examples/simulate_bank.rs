//! Run the bank's deposit/withdraw/transfer scenario and print each
//! occurrence as it was scheduled, then the final store state.
//!
//! ```bash
//! cargo run -p tmkit --example simulate_bank
//! ```

use tmkit::dsl::{parse_behavior, parse_events, parse_model, parse_scenario};
use tmkit::engine::{run, trace_line, EngineOptions};

fn source(name: &str) -> String {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).expect("corpus file")
}

fn main() {
    let model = parse_model("bank.tm", &source("bank.tm")).expect("model parses");
    let layer = parse_events("bank.tme", &source("bank.tme"), &model).expect("events parse");
    let behavior =
        parse_behavior("bank.tmb", &source("bank.tmb"), &layer).expect("behavior parses");
    let scenario =
        parse_scenario("bank_s1.tms", &source("bank_s1.tms"), &model).expect("scenario parses");

    let output = run(&model, &layer, &behavior, &scenario, &EngineOptions::default())
        .expect("run succeeds");

    println!("seq|event|start|end|duration|payload|urgency|cause");
    for occ in &output.trace.occurrences {
        println!("{}", trace_line(occ));
    }
    println!();
    for (store, value) in &output.trace.final_stores {
        println!("{store} = {}", value.render_record());
    }
}
