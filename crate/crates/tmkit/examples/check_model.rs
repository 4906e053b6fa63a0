//! Parse a model and its event layer, run every structural check, and
//! print what the validator has to say.
//!
//! ```bash
//! cargo run -p tmkit --example check_model
//! ```

use tmkit::dsl::{parse_behavior, parse_events, parse_model};
use tmkit::validate::{coverage_lint, validate_behavior, validate_events, validate_static};

fn source(name: &str) -> String {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).expect("corpus file")
}

fn main() {
    let model = match parse_model("bank.tm", &source("bank.tm")) {
        Ok(model) => model,
        Err(diags) => {
            for d in diags {
                eprintln!("{d}");
            }
            std::process::exit(1);
        }
    };
    let layer = parse_events("bank.tme", &source("bank.tme"), &model).expect("events parse");
    let behavior =
        parse_behavior("bank.tmb", &source("bank.tmb"), &layer).expect("behavior parses");

    println!(
        "{}: {} stages, {} stores, {} flows, {} triggers, {} events",
        model.name,
        model.stage_count(),
        model.store_count(),
        model.flows.len(),
        model.triggers.len(),
        layer.events.len(),
    );

    let mut diags = validate_static(&model);
    diags.extend(validate_events(&model, &layer));
    diags.extend(validate_behavior(&model, &behavior));
    diags.extend(coverage_lint(&model, &layer));

    if diags.is_empty() {
        println!("no findings");
        return;
    }
    for d in &diags {
        println!("{d}");
    }
    let errors = diags.iter().filter(|d| d.severity == tmkit::diag::Severity::Error).count();
    println!("{} findings ({errors} errors)", diags.len());
}
