//! Text front end: lexing and parsing for the five file kinds.
//!
//! - `.tm` static models, [`parse_model`]
//! - `.tme` event layers, [`parse_events`]
//! - `.tmb` behavior graphs, [`parse_behavior`]
//! - `.tms` scenarios, [`parse_scenario`]
//! - `.tmm` monitor specs, [`parse_monitor`]
//!
//! Each parser returns either the finished value or every diagnostic it
//! found, sorted by source position. References are resolved and
//! canonicalized during parsing wherever the target collection is in
//! hand, so downstream passes work with full dotted paths.

mod lexer;
mod parser;

pub use parser::{parse_behavior, parse_events, parse_model, parse_monitor, parse_scenario};
