//! Record an account's balance over a run, then ask the store the
//! three temporal questions: what held at an instant, what is the
//! full history, and what was known at an earlier transaction.
//!
//! ```bash
//! cargo run -p tmkit --example balance_history
//! ```

use tmkit::decimal::Decimal;
use tmkit::dsl::{parse_behavior, parse_events, parse_model, parse_monitor, parse_scenario};
use tmkit::engine::{run, EngineOptions};
use tmkit::temporal::record_line;

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
    let monitor = parse_monitor("bank_monitors.tmm", &source("bank_monitors.tmm"), &layer)
        .expect("monitor parses");

    let options = EngineOptions { monitor: Some(monitor), ..EngineOptions::default() };
    let output =
        run(&model, &layer, &behavior, &scenario, &options).expect("run succeeds");
    let store = &output.records;

    // valid time: the balance as of an instant on the simulated clock
    for t in [0, 5, 9, 30] {
        let t = Decimal::from_int(t);
        match store.as_of("A1.balance", t) {
            Some(record) => println!("as of {t}: {}", record_line(record)),
            None => println!("as of {t}: no record"),
        }
    }

    println!("\nfull history of A1.balance:");
    for record in store.history("A1.balance") {
        println!("  {}", record_line(record));
    }

    // transaction time: replaying what the store knew as it grew
    println!("\nas known after the first two appends:");
    for record in store.as_known_at("A1.balance", 1) {
        println!("  {}", record_line(record));
    }
}
