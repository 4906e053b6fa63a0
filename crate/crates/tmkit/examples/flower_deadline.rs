//! Run the flower auction under three scenarios and show how the
//! bidding timer and the assignment window steer each one: no bids
//! expires the auction, one bid is assigned automatically, and a
//! manual pick preempts the automatic fallback.
//!
//! ```bash
//! cargo run -p tmkit --example flower_deadline
//! ```

use tmkit::dsl::{parse_behavior, parse_events, parse_model, parse_scenario};
use tmkit::engine::{run, EngineOptions, RunOutput};
use tmkit::model::StaticModel;

fn source(name: &str) -> String {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).expect("corpus file")
}

fn show(output: &RunOutput) {
    for occ in &output.trace.occurrences {
        let urgency = occ.urgency.as_deref().map(|u| format!(" [{u}]")).unwrap_or_default();
        println!(
            "  {:>7} .. {:>7}  {}{urgency}",
            occ.valid_start.compact(),
            occ.valid_end.compact(),
            occ.event,
        );
    }
    for warning in &output.trace.warnings {
        println!("  note: {warning}");
    }
}

fn simulate(model: &StaticModel, name: &str) -> RunOutput {
    let layer =
        parse_events("flower.tme", &source("flower.tme"), model).expect("events parse");
    let behavior =
        parse_behavior("flower.tmb", &source("flower.tmb"), &layer).expect("behavior parses");
    let scenario = parse_scenario(name, &source(name), model).expect("scenario parses");
    run(model, &layer, &behavior, &scenario, &EngineOptions::default()).expect("run succeeds")
}

fn main() {
    let model = parse_model("flower.tm", &source("flower.tm")).expect("model parses");

    println!("no bids: the 120 s timer expires and the order is refunded");
    show(&simulate(&model, "flower_nobid.tms"));

    println!("\none bid: the store window closes at 60 s and assigns the driver");
    show(&simulate(&model, "flower_onebid.tms"));

    println!("\nmanual pick: the operator chooses first, so the fallback matches nothing");
    show(&simulate(&model, "flower_manual.tms"));
}
