//! Expression trees for assignments, guards, and payload math.

use std::fmt;

use crate::decimal::Decimal;
use crate::model::QualifiedRef;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    /// Binding strength; higher binds tighter. Mirrors the parser's levels.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        })
    }
}

/// An expression over number/text literals, store reads, and `$`-prefixed
/// stimulus payload fields.
#[derive(Clone, PartialEq, Debug)]
pub enum Expr {
    Number(Decimal),
    Text(String),
    Store(QualifiedRef),
    Field(String),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    /// All store references in the expression, left to right.
    pub fn store_refs(&self) -> Vec<&QualifiedRef> {
        let mut out = Vec::new();
        self.collect_stores(&mut out);
        out
    }

    fn collect_stores<'a>(&'a self, out: &mut Vec<&'a QualifiedRef>) {
        match self {
            Expr::Store(r) => out.push(r),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_stores(out);
                rhs.collect_stores(out);
            }
            _ => {}
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        match self {
            Expr::Number(n) => f.write_str(&n.compact()),
            Expr::Text(t) => write!(f, "\"{}\"", escape_text(t)),
            Expr::Store(r) => write!(f, "{r}"),
            Expr::Field(name) => write!(f, "${name}"),
            Expr::Binary { op, lhs, rhs } => {
                let prec = op.precedence();
                let parens = prec < parent;
                if parens {
                    f.write_str("(")?;
                }
                lhs.fmt_prec(f, prec)?;
                write!(f, " {op} ")?;
                // Operands at equal precedence associate left, so the right
                // side needs one level more to force parens on re-nesting.
                rhs.fmt_prec(f, prec + 1)?;
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// A runtime value: what stores hold, what stimulus fields carry, and what
/// expressions evaluate to. Literals in source text are numbers or text;
/// booleans arise only from evaluation.
#[derive(Clone, PartialEq, Debug)]
pub enum Value {
    Number(Decimal),
    Text(String),
    Bool(bool),
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Text(_) => "text",
            Value::Bool(_) => "boolean",
        }
    }

    /// Rendering for record and trace files: numbers always carry two
    /// fractional digits, text is quoted and escaped.
    pub fn render_record(&self) -> String {
        match self {
            Value::Number(n) => n.to_string(),
            Value::Text(t) => format!("\"{}\"", escape_text(t)),
            Value::Bool(b) => b.to_string(),
        }
    }

    /// Rendering for DSL output: numbers drop trailing fractional zeros.
    pub fn render_dsl(&self) -> String {
        match self {
            Value::Number(n) => n.compact(),
            Value::Text(t) => format!("\"{}\"", escape_text(t)),
            Value::Bool(b) => b.to_string(),
        }
    }

    /// Raw rendering for key templates: text without quotes.
    pub fn render_raw(&self) -> String {
        match self {
            Value::Number(n) => n.to_string(),
            Value::Text(t) => t.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }
}

pub fn escape_text(t: &str) -> String {
    let mut out = String::with_capacity(t.len());
    for c in t.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}
