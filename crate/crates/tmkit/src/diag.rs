//! Positioned diagnostics with stable codes.
//!
//! Every parser, validator, and runtime error points at a source position
//! and carries a code from the table below. Codes are stable: tools may
//! match on them.
//!
//! | code | meaning |
//! |------|---------|
//! | E001 | lexical error |
//! | E002 | syntax error |
//! | E003 | for-clause names a different model |
//! | E010 | duplicate name |
//! | E011 | unresolved reference |
//! | E020 | refinement names an unknown event |
//! | E021 | region reference is not a stage of the model |
//! | E022 | empty event region |
//! | E023 | payload source must name a store |
//! | E030 | behavior references an unknown event |
//! | E031 | non-positive or negative duration |
//! | E032 | behavior declares no start binding |
//! | E040 | injection target is not a transfer stage |
//! | E041 | negative stimulus time |
//! | E043 | monitor references an unknown event |
//! | E044 | malformed or empty monitor spec |
//! | E050 | illegal flow endpoints or stage-kind pair |
//! | E051 | trigger stays inside one machine |
//! | E052 | store write from a stage that is not create/process |
//! | E062 | refinement cycle |
//! | W060 | stage has no incident arcs |
//! | W061 | event region is not weakly connected |
//! | W070 | stage not covered by any event region |
//! | W080 | occurrence matched no successor edge |
//! | W081 | stimulus targets a stage with no start binding |
//! | R100 | occurrence limit exceeded |
//! | R101 | expression evaluation failed |
//! | T200 | monitor references a payload field absent from the occurrence |

use std::fmt;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct SourcePos {
    pub file: String,
    pub line: u32,
    pub col: u32,
}

impl SourcePos {
    pub fn new(file: impl Into<String>, line: u32, col: u32) -> SourcePos {
        SourcePos { file: file.into(), line, col }
    }

    /// Position for values constructed in code rather than parsed.
    pub fn synthetic() -> SourcePos {
        SourcePos::new("<synthetic>", 1, 1)
    }
}

impl Default for SourcePos {
    fn default() -> SourcePos {
        SourcePos::synthetic()
    }
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub pos: SourcePos,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>, pos: SourcePos) -> Diagnostic {
        Diagnostic { severity: Severity::Error, code, message: message.into(), pos }
    }

    pub fn warning(code: &'static str, message: impl Into<String>, pos: SourcePos) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, code, message: message.into(), pos }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {} {}", self.pos, self.severity, self.code, self.message)
    }
}

/// Canonical reporting order: file, then line, then column, then code.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (&a.pos.file, a.pos.line, a.pos.col, a.code, &a.message)
            .cmp(&(&b.pos.file, b.pos.line, b.pos.col, b.code, &b.message))
    });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_matches_tool_convention() {
        let d = Diagnostic::error("E050", "flow not allowed", SourcePos::new("bank.tm", 4, 3));
        assert_eq!(d.to_string(), "bank.tm:4:3: error E050 flow not allowed");
    }

    #[test]
    fn sorting_is_by_position_then_code() {
        let mut diags = vec![
            Diagnostic::error("E011", "b", SourcePos::new("a.tm", 2, 9)),
            Diagnostic::error("E010", "a", SourcePos::new("a.tm", 2, 9)),
            Diagnostic::warning("W060", "w", SourcePos::new("a.tm", 1, 1)),
        ];
        sort_diagnostics(&mut diags);
        let codes: Vec<_> = diags.iter().map(|d| d.code).collect();
        assert_eq!(codes, vec!["W060", "E010", "E011"]);
    }
}
