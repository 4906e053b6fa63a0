//! Emit the three Graphviz views of the bank: the machine structure,
//! the event regions shaded over it, and the behavior graph.
//!
//! ```bash
//! cargo run -p tmkit --example render_dot > bank.dot
//! dot -Tsvg bank.dot -o bank.svg
//! ```

use tmkit::dsl::{parse_behavior, parse_events, parse_model};
use tmkit::render::{dot_behavior, dot_events, dot_static};

fn source(name: &str) -> String {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).expect("corpus file")
}

fn main() {
    let model = parse_model("bank.tm", &source("bank.tm")).expect("model parses");
    let layer = parse_events("bank.tme", &source("bank.tme"), &model).expect("events parse");
    let behavior =
        parse_behavior("bank.tmb", &source("bank.tmb"), &layer).expect("behavior parses");

    // pick one view on the command line: static (default), events, behavior
    let view = std::env::args().nth(1).unwrap_or_else(|| "static".into());
    let dot = match view.as_str() {
        "static" => dot_static(&model),
        "events" => dot_events(&model, &layer, None),
        "behavior" => dot_behavior(&layer, &behavior),
        other => {
            eprintln!("unknown view '{other}'; use static, events, or behavior");
            std::process::exit(2);
        }
    };
    print!("{dot}");
}
