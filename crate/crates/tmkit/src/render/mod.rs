//! Output back ends: Graphviz DOT views and the canonical text form.
//!
//! The DOT emitters draw three views of one system: [`dot_static`] for
//! the machine structure, [`dot_events`] to shade event regions over
//! it, and [`dot_behavior`] for the event-to-event graph. The `canon`
//! functions print parsed values back out as normalized source text;
//! rendering, reparsing, and rendering again always reproduces the
//! same bytes.

mod canon;
mod dot;

pub use canon::{render_behavior, render_events, render_model, render_monitor, render_scenario};
pub use dot::{dot_behavior, dot_events, dot_static};
