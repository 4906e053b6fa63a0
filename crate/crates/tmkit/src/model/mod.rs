//! Static machine models: thimacs, stages, stores, flows, triggers.
//!
//! A model is a tree of thimacs (thinging machines). Each thimac holds
//! stages (the five operation kinds), scalar stores, and child thimacs.
//! Flows connect stages inside the tree; triggers connect stages across
//! distinct machines. Everything is addressed by dot-separated qualified
//! names rooted at the model's top-level thimacs.

pub mod expr;
mod graph;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use expr::{BinOp, Expr, Value};
pub use graph::{stage_graph, ArcKind, GraphArc, StageGraph};

use crate::diag::SourcePos;

/// The five stage kinds. Flow legality is defined entirely over these.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum StageKind {
    Create,
    Process,
    Release,
    Transfer,
    Receive,
}

impl StageKind {
    pub fn keyword(self) -> &'static str {
        match self {
            StageKind::Create => "create",
            StageKind::Process => "process",
            StageKind::Release => "release",
            StageKind::Transfer => "transfer",
            StageKind::Receive => "receive",
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A dot-separated path addressing a thimac, stage, or store from the
/// model roots, e.g. `System.Validation.check`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct QualifiedRef {
    pub segments: Vec<String>,
}

impl QualifiedRef {
    pub fn new(segments: Vec<String>) -> QualifiedRef {
        QualifiedRef { segments }
    }

    pub fn from_dotted(path: &str) -> QualifiedRef {
        QualifiedRef { segments: path.split('.').map(str::to_owned).collect() }
    }

    /// Last segment: the local name of the addressed item.
    pub fn leaf(&self) -> &str {
        self.segments.last().map(String::as_str).unwrap_or("")
    }

    /// Path of the containing thimac (everything but the leaf).
    pub fn parent(&self) -> QualifiedRef {
        QualifiedRef { segments: self.segments[..self.segments.len().saturating_sub(1)].to_vec() }
    }

    pub fn child(&self, name: &str) -> QualifiedRef {
        let mut segments = self.segments.clone();
        segments.push(name.to_owned());
        QualifiedRef { segments }
    }
}

impl fmt::Display for QualifiedRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.segments.join("."))
    }
}

impl FromStr for QualifiedRef {
    type Err = ();

    fn from_str(s: &str) -> Result<QualifiedRef, ()> {
        if s.is_empty() || s.split('.').any(|seg| seg.is_empty()) {
            return Err(());
        }
        Ok(QualifiedRef::from_dotted(s))
    }
}

/// Value kinds a store can hold.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ValueKind {
    Number,
    Text,
}

impl ValueKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ValueKind::Number => "number",
            ValueKind::Text => "text",
        }
    }
}

/// A scalar store: named, typed, with an initial value.
#[derive(Clone, PartialEq, Debug)]
pub struct Store {
    pub name: String,
    pub value_kind: ValueKind,
    pub initial: Value,
    pub pos: SourcePos,
}

/// An assignment attached to a create or process stage: evaluate `expr`
/// when the stage executes and, when `into` names a store, write the
/// result there. Without `into` the value describes the created thing
/// but is not persisted.
#[derive(Clone, PartialEq, Debug)]
pub struct Assignment {
    pub expr: Expr,
    pub into: Option<QualifiedRef>,
}

/// A stage: one operation of a thimac.
#[derive(Clone, PartialEq, Debug)]
pub struct Stage {
    pub name: String,
    pub kind: StageKind,
    pub assignment: Option<Assignment>,
    /// Free-text annotation from the source, kept for rendering.
    pub label: Option<String>,
    pub pos: SourcePos,
}

/// A thimac: a named machine holding stages, stores, and child thimacs.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Thimac {
    pub name: String,
    pub stages: Vec<Stage>,
    pub stores: Vec<Store>,
    pub children: Vec<Thimac>,
    pub pos: SourcePos,
}

impl Thimac {
    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn store(&self, name: &str) -> Option<&Store> {
        self.stores.iter().find(|s| s.name == name)
    }

    pub fn child(&self, name: &str) -> Option<&Thimac> {
        self.children.iter().find(|c| c.name == name)
    }
}

/// A solid arc between two stages.
#[derive(Clone, PartialEq, Debug)]
pub struct Flow {
    pub from: QualifiedRef,
    pub to: QualifiedRef,
    pub pos: SourcePos,
}

/// A dashed arc between stages of distinct machines: completion of `from`
/// activates `to` without moving a thing between them.
#[derive(Clone, PartialEq, Debug)]
pub struct Trigger {
    pub from: QualifiedRef,
    pub to: QualifiedRef,
    pub pos: SourcePos,
}

/// What a qualified reference resolves to.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Resolution<'a> {
    Thimac(&'a Thimac),
    Stage { owner: &'a Thimac, stage: &'a Stage },
    Store { owner: &'a Thimac, store: &'a Store },
}

impl<'a> Resolution<'a> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Resolution::Thimac(_) => "thimac",
            Resolution::Stage { .. } => "stage",
            Resolution::Store { .. } => "store",
        }
    }
}

/// A complete static model.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct StaticModel {
    pub name: String,
    pub roots: Vec<Thimac>,
    pub flows: Vec<Flow>,
    pub triggers: Vec<Trigger>,
}

impl StaticModel {
    /// Resolve a qualified reference against the thimac tree. Resolution
    /// is context free: the first segment names a root thimac. As a
    /// convenience, a leading segment equal to the model name is stripped
    /// and retried when direct resolution fails, so `Bank.Account.value`
    /// and `Account.value` address the same store.
    pub fn resolve<'a>(&'a self, r: &QualifiedRef) -> Option<Resolution<'a>> {
        if let Some(hit) = self.resolve_direct(&r.segments) {
            return Some(hit);
        }
        if r.segments.len() > 1 && r.segments[0] == self.name {
            return self.resolve_direct(&r.segments[1..]);
        }
        None
    }

    /// The canonical (alias-stripped) form of a reference, when it resolves.
    pub fn canonical(&self, r: &QualifiedRef) -> Option<QualifiedRef> {
        if self.resolve_direct(&r.segments).is_some() {
            return Some(r.clone());
        }
        if r.segments.len() > 1 && r.segments[0] == self.name {
            let stripped = QualifiedRef::new(r.segments[1..].to_vec());
            if self.resolve_direct(&stripped.segments).is_some() {
                return Some(stripped);
            }
        }
        None
    }

    fn resolve_direct<'a>(&'a self, segments: &[String]) -> Option<Resolution<'a>> {
        let first = segments.first()?;
        let mut thimac = self.roots.iter().find(|t| &t.name == first)?;
        for (i, seg) in segments.iter().enumerate().skip(1) {
            let last = i + 1 == segments.len();
            if let Some(child) = thimac.child(seg) {
                thimac = child;
                continue;
            }
            if last {
                if let Some(stage) = thimac.stage(seg) {
                    return Some(Resolution::Stage { owner: thimac, stage });
                }
                if let Some(store) = thimac.store(seg) {
                    return Some(Resolution::Store { owner: thimac, store });
                }
            }
            return None;
        }
        Some(Resolution::Thimac(thimac))
    }

    /// Depth-first walk over every thimac, stage, and store with its
    /// canonical path. Thimacs appear before their contents; stages
    /// before stores; children last. Order is declaration order.
    pub fn walk(&self) -> Vec<(QualifiedRef, Resolution<'_>)> {
        let mut out = Vec::new();
        for root in &self.roots {
            Self::walk_thimac(root, QualifiedRef::new(vec![root.name.clone()]), &mut out);
        }
        out
    }

    fn walk_thimac<'a>(
        thimac: &'a Thimac,
        path: QualifiedRef,
        out: &mut Vec<(QualifiedRef, Resolution<'a>)>,
    ) {
        out.push((path.clone(), Resolution::Thimac(thimac)));
        for stage in &thimac.stages {
            out.push((path.child(&stage.name), Resolution::Stage { owner: thimac, stage }));
        }
        for store in &thimac.stores {
            out.push((path.child(&store.name), Resolution::Store { owner: thimac, store }));
        }
        for child in &thimac.children {
            Self::walk_thimac(child, path.child(&child.name), out);
        }
    }

    /// Canonical path of the machine (thimac) owning a stage or store ref.
    pub fn owner_path(&self, r: &QualifiedRef) -> Option<QualifiedRef> {
        let canon = self.canonical(r)?;
        match self.resolve(&canon)? {
            Resolution::Thimac(_) => Some(canon),
            Resolution::Stage { .. } | Resolution::Store { .. } => Some(canon.parent()),
        }
    }

    pub fn stage_count(&self) -> usize {
        self.walk().iter().filter(|(_, r)| matches!(r, Resolution::Stage { .. })).count()
    }

    pub fn store_count(&self) -> usize {
        self.walk().iter().filter(|(_, r)| matches!(r, Resolution::Store { .. })).count()
    }

    /// Initial store state: canonical store path -> initial value.
    pub fn initial_stores(&self) -> BTreeMap<String, Value> {
        self.walk()
            .into_iter()
            .filter_map(|(path, res)| match res {
                Resolution::Store { store, .. } => Some((path.to_string(), store.initial.clone())),
                _ => None,
            })
            .collect()
    }
}
