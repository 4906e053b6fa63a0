//! Toolkit for modeling systems as thinging machines: parse the textual
//! DSL into a static model, layer events and a behavioral chronology on
//! top, run deterministic discrete-event simulations, and materialize
//! occurrences as bitemporal records that can be queried as of any moment.
//!
//! Start with [`dsl::parse_model`] and the `examples/` directory.

pub mod cli;
pub mod decimal;
pub mod diag;
pub mod dsl;
pub mod dynamics;
pub mod engine;
pub mod model;
pub mod render;
pub mod temporal;
pub mod validate;

pub use decimal::Decimal;
pub use diag::{Diagnostic, Severity, SourcePos};
