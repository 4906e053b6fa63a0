//! Recursive-descent parsers for the five file kinds. Lexical (E001) and
//! syntax (E002) problems abort at the first offender; semantic problems
//! (duplicates, unresolved references, bad targets) are collected so one
//! pass reports them all, sorted by position.

use crate::decimal::Decimal;
use crate::diag::{sort_diagnostics, Diagnostic, SourcePos};
use crate::dsl::lexer::{lex, Kw, Token, TokenKind};
use crate::dynamics::{BehaviorEdge, BehaviorGraph, EdgeMode, Event, EventLayer, PayloadSrc, StartBinding};
use crate::engine::{canonicalize_expr, Scenario, Stimulus};
use crate::model::{
    Assignment, BinOp, Expr, Flow, QualifiedRef, Resolution, Stage, StageKind, StaticModel, Store,
    Thimac, Trigger, Value, ValueKind,
};
use crate::temporal::{MonitorSpec, Selection};

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    /// Collected semantic diagnostics (syntax problems abort instead).
    diags: Vec<Diagnostic>,
}

type Syntax<T> = Result<T, Diagnostic>;

impl Parser {
    fn new(file: &str, text: &str) -> Result<Parser, Diagnostic> {
        Ok(Parser { tokens: lex(file, text)?, at: 0, diags: Vec::new() })
    }

    fn peek(&self) -> &TokenKind {
        &self.tokens[self.at].kind
    }

    fn peek_pos(&self) -> SourcePos {
        self.tokens[self.at].pos.clone()
    }

    fn bump(&mut self) -> Token {
        let token = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        token
    }

    fn error(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic::error("E002", message, self.peek_pos())
    }

    fn semantic(&mut self, code: &'static str, message: impl Into<String>, pos: SourcePos) {
        self.diags.push(Diagnostic::error(code, message, pos));
    }

    fn eat_kw(&mut self, kw: Kw) -> bool {
        if self.peek() == &TokenKind::Kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: Kw) -> Syntax<SourcePos> {
        if self.peek() == &TokenKind::Kw(kw) {
            Ok(self.bump().pos)
        } else {
            Err(self.error(format!("expected '{}', found {}", kw.text(), self.peek())))
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Syntax<SourcePos> {
        if self.peek() == &kind {
            Ok(self.bump().pos)
        } else {
            Err(self.error(format!("expected {what}, found {}", self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> Syntax<(String, SourcePos)> {
        match self.peek() {
            TokenKind::Ident(_) => {
                let token = self.bump();
                let TokenKind::Ident(name) = token.kind else { unreachable!() };
                Ok((name, token.pos))
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.peek()))),
        }
    }

    /// A contextual keyword: an identifier with a fixed spelling.
    fn word(&mut self, want: &str) -> Syntax<SourcePos> {
        match self.peek() {
            TokenKind::Ident(w) if w == want => Ok(self.bump().pos),
            _ => Err(self.error(format!("expected '{want}', found {}", self.peek()))),
        }
    }

    fn peek_word(&self, want: &str) -> bool {
        matches!(self.peek(), TokenKind::Ident(w) if w == want)
    }

    fn text(&mut self, what: &str) -> Syntax<(String, SourcePos)> {
        match self.peek() {
            TokenKind::Text(_) => {
                let token = self.bump();
                let TokenKind::Text(text) = token.kind else { unreachable!() };
                Ok((text, token.pos))
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.peek()))),
        }
    }

    /// A number, with an optional leading minus.
    fn number(&mut self, what: &str) -> Syntax<(Decimal, SourcePos)> {
        let negative = self.peek() == &TokenKind::Minus;
        let minus_pos = self.peek_pos();
        if negative {
            self.bump();
        }
        match self.peek() {
            TokenKind::Number(_) => {
                let token = self.bump();
                let TokenKind::Number(n) = token.kind else { unreachable!() };
                let n = if negative {
                    n.checked_neg().ok_or_else(|| self.error("number out of range"))?
                } else {
                    n
                };
                Ok((n, if negative { minus_pos } else { token.pos }))
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.peek()))),
        }
    }

    /// A number or text literal (scenario fields, store initials).
    fn literal(&mut self, what: &str) -> Syntax<(Value, SourcePos)> {
        match self.peek() {
            TokenKind::Text(_) => {
                let (t, pos) = self.text(what)?;
                Ok((Value::Text(t), pos))
            }
            TokenKind::Number(_) | TokenKind::Minus => {
                let (n, pos) = self.number(what)?;
                Ok((Value::Number(n), pos))
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.peek()))),
        }
    }

    fn qref(&mut self, what: &str) -> Syntax<(QualifiedRef, SourcePos)> {
        let (first, pos) = self.ident(what)?;
        let mut segments = vec![first];
        while self.peek() == &TokenKind::Dot {
            self.bump();
            let (next, _) = self.ident("a name after '.'")?;
            segments.push(next);
        }
        Ok((QualifiedRef::new(segments), pos))
    }

    fn expect_eof(&mut self) -> Syntax<()> {
        if self.peek() == &TokenKind::Eof {
            Ok(())
        } else {
            Err(self.error(format!("expected end of input, found {}", self.peek())))
        }
    }

    /// Consumes an optional separator comma inside a brace list.
    fn list_comma(&mut self) {
        if self.peek() == &TokenKind::Comma {
            self.bump();
        }
    }

    // Expressions, precedence climbing: or < and < comparisons < additive.

    fn expr(&mut self) -> Syntax<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Syntax<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw(Kw::Or) {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Syntax<Expr> {
        let mut lhs = self.cmp_expr()?;
        while self.eat_kw(Kw::And) {
            let rhs = self.cmp_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Syntax<Expr> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                TokenKind::Eq => BinOp::Eq,
                TokenKind::Ne => BinOp::Ne,
                TokenKind::Lt => BinOp::Lt,
                TokenKind::Le => BinOp::Le,
                TokenKind::Gt => BinOp::Gt,
                TokenKind::Ge => BinOp::Ge,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.add_expr()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn add_expr(&mut self) -> Syntax<Expr> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.primary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn primary(&mut self) -> Syntax<Expr> {
        match self.peek() {
            TokenKind::Number(_) => {
                let (n, _) = self.number("a number")?;
                Ok(Expr::Number(n))
            }
            TokenKind::Minus => {
                let (n, _) = self.number("a number")?;
                Ok(Expr::Number(n))
            }
            TokenKind::Text(_) => {
                let (t, _) = self.text("a text literal")?;
                Ok(Expr::Text(t))
            }
            TokenKind::Field(_) => {
                let token = self.bump();
                let TokenKind::Field(name) = token.kind else { unreachable!() };
                Ok(Expr::Field(name))
            }
            TokenKind::Ident(_) => {
                let (r, _) = self.qref("a store reference")?;
                Ok(Expr::Store(r))
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(self.error(format!("expected an expression, found {}", self.peek()))),
        }
    }
}

// ---- static models (.tm) ----

/// Parses a `.tm` model file and canonicalizes every reference in it.
pub fn parse_model(file: &str, text: &str) -> Result<StaticModel, Vec<Diagnostic>> {
    let mut p = Parser::new(file, text).map_err(|d| vec![d])?;
    match model_file(&mut p) {
        Ok(model) if p.diags.is_empty() => Ok(model),
        Ok(_) => {
            sort_diagnostics(&mut p.diags);
            Err(p.diags)
        }
        Err(diag) => Err(vec![diag]),
    }
}

fn model_file(p: &mut Parser) -> Syntax<StaticModel> {
    p.expect_kw(Kw::Model)?;
    let (name, _) = p.ident("a model name")?;
    p.expect(TokenKind::LBrace, "'{'")?;
    let mut model =
        StaticModel { name, roots: Vec::new(), flows: Vec::new(), triggers: Vec::new() };
    loop {
        match p.peek() {
            TokenKind::Kw(Kw::Thimac) => {
                let thimac = thimac_decl(p)?;
                model.roots.push(thimac);
            }
            TokenKind::Kw(Kw::Flow) => {
                let pos = p.bump().pos;
                let (from, _) = p.qref("a stage reference")?;
                p.expect(TokenKind::Arrow, "'->'")?;
                let (to, _) = p.qref("a stage or store reference")?;
                model.flows.push(Flow { from, to, pos });
            }
            TokenKind::Kw(Kw::Trigger) => {
                let pos = p.bump().pos;
                let (from, _) = p.qref("a stage reference")?;
                p.expect(TokenKind::TriggerArrow, "'~>'")?;
                let (to, _) = p.qref("a stage reference")?;
                model.triggers.push(Trigger { from, to, pos });
            }
            TokenKind::RBrace => {
                p.bump();
                break;
            }
            _ => {
                return Err(p.error(format!(
                    "expected 'thimac', 'flow', 'trigger', or '}}', found {}",
                    p.peek()
                )))
            }
        }
    }
    p.expect_eof()?;
    check_model(p, &mut model);
    Ok(model)
}

fn thimac_decl(p: &mut Parser) -> Syntax<Thimac> {
    let pos = p.expect_kw(Kw::Thimac)?;
    let (name, _) = p.ident("a thimac name")?;
    p.expect(TokenKind::LBrace, "'{'")?;
    let mut thimac = Thimac { name, pos, ..Thimac::default() };
    loop {
        let kind = match p.peek() {
            TokenKind::Kw(Kw::Thimac) => {
                let child = thimac_decl(p)?;
                thimac.children.push(child);
                continue;
            }
            TokenKind::Kw(Kw::Store) => {
                let store = store_decl(p)?;
                thimac.stores.push(store);
                continue;
            }
            TokenKind::Kw(Kw::Create) => StageKind::Create,
            TokenKind::Kw(Kw::Process) => StageKind::Process,
            TokenKind::Kw(Kw::Release) => StageKind::Release,
            TokenKind::Kw(Kw::Transfer) => StageKind::Transfer,
            TokenKind::Kw(Kw::Receive) => StageKind::Receive,
            TokenKind::RBrace => {
                p.bump();
                return Ok(thimac);
            }
            _ => {
                return Err(p.error(format!(
                    "expected a stage kind, 'store', 'thimac', or '}}', found {}",
                    p.peek()
                )))
            }
        };
        let stage = stage_decl(p, kind)?;
        thimac.stages.push(stage);
    }
}

fn stage_decl(p: &mut Parser, kind: StageKind) -> Syntax<Stage> {
    let pos = p.bump().pos; // the kind keyword
    let (name, _) = p.ident("a stage name")?;
    let mut assignment = None;
    if p.peek() == &TokenKind::Assign {
        if !matches!(kind, StageKind::Create | StageKind::Process) {
            return Err(p.error(format!(
                "only create and process stages may carry an assignment, this one is {kind}"
            )));
        }
        p.bump();
        let expr = p.expr()?;
        let into = if p.eat_kw(Kw::Into) {
            let (target, _) = p.qref("a store reference")?;
            Some(target)
        } else {
            None
        };
        assignment = Some(Assignment { expr, into });
    }
    let label = match p.peek() {
        TokenKind::Text(_) => Some(p.text("a label")?.0),
        _ => None,
    };
    Ok(Stage { name, kind, assignment, label, pos })
}

fn store_decl(p: &mut Parser) -> Syntax<Store> {
    let pos = p.expect_kw(Kw::Store)?;
    let (name, _) = p.ident("a store name")?;
    p.expect(TokenKind::Colon, "':'")?;
    let (kind_word, kind_pos) = p.ident("'number' or 'text'")?;
    let value_kind = match kind_word.as_str() {
        "number" => ValueKind::Number,
        "text" => ValueKind::Text,
        other => {
            return Err(Diagnostic::error(
                "E002",
                format!("expected 'number' or 'text', found '{other}'"),
                kind_pos,
            ))
        }
    };
    p.expect(TokenKind::Assign, "'='")?;
    let (initial, initial_pos) = p.literal("a number or text initial value")?;
    let matches_kind = matches!(
        (&initial, value_kind),
        (Value::Number(_), ValueKind::Number) | (Value::Text(_), ValueKind::Text)
    );
    if !matches_kind {
        return Err(Diagnostic::error(
            "E002",
            format!("store '{name}' is {} but its initial value is not", value_kind.keyword()),
            initial_pos,
        ));
    }
    Ok(Store { name, value_kind, initial, pos })
}

/// Collected semantic checks for a parsed model: duplicate names (E010)
/// and unresolved references (E011), plus canonicalization of every
/// reference that does resolve.
fn check_model(p: &mut Parser, model: &mut StaticModel) {
    let mut seen_roots: Vec<&str> = Vec::new();
    for root in &model.roots {
        if seen_roots.contains(&root.name.as_str()) {
            let message = format!("duplicate thimac '{}'", root.name);
            p.semantic("E010", message, root.pos.clone());
        }
        seen_roots.push(&root.name);
        check_thimac_names(p, root);
    }

    let mut arc_refs: Vec<(&QualifiedRef, &SourcePos)> = Vec::new();
    for flow in &model.flows {
        arc_refs.push((&flow.from, &flow.pos));
        arc_refs.push((&flow.to, &flow.pos));
    }
    for trigger in &model.triggers {
        arc_refs.push((&trigger.from, &trigger.pos));
        arc_refs.push((&trigger.to, &trigger.pos));
    }
    for (r, pos) in arc_refs {
        if model.resolve(r).is_none() {
            p.semantic("E011", format!("unresolved reference '{r}'"), pos.clone());
        }
    }

    // Canonicalization leaves unresolved refs as written.
    let canon = |model: &StaticModel, r: &QualifiedRef| model.canonical(r).unwrap_or_else(|| r.clone());
    let snapshot = model.clone();
    for flow in &mut model.flows {
        flow.from = canon(&snapshot, &flow.from);
        flow.to = canon(&snapshot, &flow.to);
    }
    for trigger in &mut model.triggers {
        trigger.from = canon(&snapshot, &trigger.from);
        trigger.to = canon(&snapshot, &trigger.to);
    }

    // Assignment refs: the `into` target and stores read by the expr.
    let mut assignment_fixes: Vec<Diagnostic> = Vec::new();
    for root in &mut model.roots {
        rewrite_thimac_assignments(&snapshot, root, &mut assignment_fixes);
    }
    p.diags.extend(assignment_fixes);
}

fn check_thimac_names(p: &mut Parser, thimac: &Thimac) {
    let mut seen: Vec<&str> = Vec::new();
    let note = |p: &mut Parser, name: &str, pos: &SourcePos, seen: &mut Vec<&str>| {
        if seen.contains(&name) {
            let message = format!("duplicate name '{name}' in thimac '{}'", thimac.name);
            p.semantic("E010", message, pos.clone());
        }
    };
    for stage in &thimac.stages {
        note(p, &stage.name, &stage.pos, &mut seen);
        seen.push(&stage.name);
    }
    for store in &thimac.stores {
        note(p, &store.name, &store.pos, &mut seen);
        seen.push(&store.name);
    }
    for child in &thimac.children {
        note(p, &child.name, &child.pos, &mut seen);
        seen.push(&child.name);
    }
    for child in &thimac.children {
        check_thimac_names(p, child);
    }
}

fn rewrite_thimac_assignments(
    model: &StaticModel,
    thimac: &mut Thimac,
    diags: &mut Vec<Diagnostic>,
) {
    for stage in &mut thimac.stages {
        let Some(assignment) = &mut stage.assignment else { continue };
        canonicalize_expr(model, &mut assignment.expr);
        for read in assignment.expr.store_refs() {
            if !matches!(model.resolve(read), Some(Resolution::Store { .. })) {
                diags.push(Diagnostic::error(
                    "E011",
                    format!("unresolved reference '{read}' (expected a store)"),
                    stage.pos.clone(),
                ));
            }
        }
        if let Some(into) = &mut assignment.into {
            match model.canonical(into) {
                Some(canon) => *into = canon,
                None => diags.push(Diagnostic::error(
                    "E011",
                    format!("unresolved reference '{into}'"),
                    stage.pos.clone(),
                )),
            }
        }
    }
    for child in &mut thimac.children {
        rewrite_thimac_assignments(model, child, diags);
    }
}

// ---- event layers (.tme) ----

/// Parses a `.tme` events file against its model.
pub fn parse_events(file: &str, text: &str, model: &StaticModel) -> Result<EventLayer, Vec<Diagnostic>> {
    let mut p = Parser::new(file, text).map_err(|d| vec![d])?;
    match events_file(&mut p, model) {
        Ok(layer) if p.diags.is_empty() => Ok(layer),
        Ok(_) => {
            sort_diagnostics(&mut p.diags);
            Err(p.diags)
        }
        Err(diag) => Err(vec![diag]),
    }
}

fn events_file(p: &mut Parser, model: &StaticModel) -> Syntax<EventLayer> {
    p.expect_kw(Kw::Events)?;
    let for_pos = p.word("for")?;
    let (for_name, _) = p.ident("a model name")?;
    if for_name != model.name {
        let message =
            format!("events are for '{for_name}' but the model is '{}'", model.name);
        p.semantic("E003", message, for_pos);
    }
    p.expect(TokenKind::LBrace, "'{'")?;
    let mut layer = EventLayer { model_name: for_name, events: Vec::new() };
    loop {
        match p.peek() {
            TokenKind::Kw(Kw::Event) => {
                let event = event_decl(p, model)?;
                if layer.events.iter().any(|e| e.id == event.id) {
                    let message = format!("duplicate event '{}'", event.id);
                    p.semantic("E010", message, event.pos.clone());
                }
                layer.events.push(event);
            }
            TokenKind::RBrace => {
                p.bump();
                break;
            }
            _ => return Err(p.error(format!("expected 'event' or '}}', found {}", p.peek()))),
        }
    }
    p.expect_eof()?;
    for event in &layer.events {
        if let Some(parent) = &event.refines {
            if layer.event(parent).is_none() {
                let message =
                    format!("event '{}' refines unknown event '{parent}'", event.id);
                p.semantic("E020", message, event.pos.clone());
            }
        }
    }
    Ok(layer)
}

fn event_decl(p: &mut Parser, model: &StaticModel) -> Syntax<Event> {
    let pos = p.expect_kw(Kw::Event)?;
    let (id, _) = p.ident("an event id")?;
    let refines = if p.eat_kw(Kw::Refines) {
        Some(p.ident("an event id")?.0)
    } else {
        None
    };
    p.word("over")?;
    p.expect(TokenKind::LBrace, "'{'")?;
    let mut region = Vec::new();
    let mut written = 0usize;
    let region_pos = p.peek_pos();
    while p.peek() != &TokenKind::RBrace {
        let (r, r_pos) = p.qref("a stage reference")?;
        written += 1;
        match model.resolve(&r) {
            Some(Resolution::Stage { .. }) => {
                region.push(model.canonical(&r).expect("resolved"));
            }
            Some(other) => {
                let message =
                    format!("region reference '{r}' is a {}, not a stage", other.kind_name());
                p.semantic("E021", message, r_pos);
            }
            None => {
                let message = format!("region reference '{r}' is not a stage of the model");
                p.semantic("E021", message, r_pos);
            }
        }
        p.list_comma();
    }
    p.bump(); // '}'
    if written == 0 {
        p.semantic("E022", format!("event '{id}' has an empty region"), region_pos);
    }

    let mut duration = Decimal::ZERO;
    let mut payload_spec: Vec<(String, PayloadSrc)> = Vec::new();
    let mut seen_lasts = false;
    let mut seen_payload = false;
    loop {
        if p.peek() == &TokenKind::Kw(Kw::Lasts) && !seen_lasts {
            seen_lasts = true;
            p.bump();
            let (n, n_pos) = p.number("a duration in seconds")?;
            if n.is_negative() {
                p.semantic("E031", format!("event '{id}' has a negative duration"), n_pos);
            } else {
                duration = n;
            }
        } else if p.peek() == &TokenKind::Kw(Kw::Payload) && !seen_payload {
            seen_payload = true;
            p.bump();
            p.expect(TokenKind::LBrace, "'{'")?;
            while p.peek() != &TokenKind::RBrace {
                let (name, name_pos) = p.ident("a payload field name")?;
                p.expect(TokenKind::Colon, "':'")?;
                let src = payload_src(p, model)?;
                if payload_spec.iter().any(|(n, _)| n == &name) {
                    let message = format!("duplicate payload field '{name}' on event '{id}'");
                    p.semantic("E010", message, name_pos);
                } else if let Some(src) = src {
                    payload_spec.push((name, src));
                }
                p.list_comma();
            }
            p.bump(); // '}'
        } else {
            break;
        }
    }
    Ok(Event { id, refines, region, duration, payload_spec, pos })
}

/// One payload source: `$field` or a store reference. Returns Ok(None)
/// when the ref parses but names no store (diagnostic already recorded).
fn payload_src(p: &mut Parser, model: &StaticModel) -> Syntax<Option<PayloadSrc>> {
    match p.peek() {
        TokenKind::Field(_) => {
            let token = p.bump();
            let TokenKind::Field(name) = token.kind else { unreachable!() };
            Ok(Some(PayloadSrc::Field(name)))
        }
        TokenKind::Ident(_) => {
            let (r, r_pos) = p.qref("a store reference")?;
            match model.resolve(&r) {
                Some(Resolution::Store { .. }) => {
                    Ok(Some(PayloadSrc::Store(model.canonical(&r).expect("resolved"))))
                }
                _ => {
                    let message = format!("payload source '{r}' must name a store");
                    p.semantic("E023", message, r_pos);
                    Ok(None)
                }
            }
        }
        _ => Err(p.error(format!(
            "expected a '$field' or store reference, found {}",
            p.peek()
        ))),
    }
}

// ---- behavior graphs (.tmb) ----

/// Parses a `.tmb` behavior file against its event layer. Store
/// references inside guards stay as written; the engine canonicalizes
/// them against the model before a run.
pub fn parse_behavior(file: &str, text: &str, layer: &EventLayer) -> Result<BehaviorGraph, Vec<Diagnostic>> {
    let mut p = Parser::new(file, text).map_err(|d| vec![d])?;
    match behavior_file(&mut p, layer) {
        Ok(graph) if p.diags.is_empty() => Ok(graph),
        Ok(_) => {
            sort_diagnostics(&mut p.diags);
            Err(p.diags)
        }
        Err(diag) => Err(vec![diag]),
    }
}

fn behavior_file(p: &mut Parser, layer: &EventLayer) -> Syntax<BehaviorGraph> {
    let header_pos = p.expect_kw(Kw::Behavior)?;
    let for_pos = p.word("for")?;
    let (for_name, _) = p.ident("a model name")?;
    if for_name != layer.model_name {
        let message = format!(
            "behavior is for '{for_name}' but the event layer is for '{}'",
            layer.model_name
        );
        p.semantic("E003", message, for_pos);
    }
    p.expect(TokenKind::LBrace, "'{'")?;
    let mut graph = BehaviorGraph::default();
    loop {
        match p.peek() {
            TokenKind::Kw(Kw::Start) => {
                let pos = p.bump().pos;
                let (event, event_pos) = p.ident("an event id")?;
                if layer.event(&event).is_none() {
                    p.semantic("E030", format!("unknown event '{event}'"), event_pos);
                }
                p.word("on")?;
                let (stage, _) = p.qref("a stage reference")?;
                if graph.starts.iter().any(|s| s.stage == stage) {
                    let message = format!("duplicate start binding for stage '{stage}'");
                    p.semantic("E010", message, pos.clone());
                }
                graph.starts.push(StartBinding { stage, event, pos });
            }
            TokenKind::Ident(_) => {
                let (from, from_pos) = p.ident("an event id")?;
                p.expect(TokenKind::Arrow, "'->'")?;
                let (to, to_pos) = p.ident("an event id")?;
                for (event, pos) in [(&from, &from_pos), (&to, &to_pos)] {
                    if layer.event(event).is_none() {
                        p.semantic("E030", format!("unknown event '{event}'"), pos.clone());
                    }
                }
                let mode = if p.eat_kw(Kw::When) {
                    EdgeMode::Guarded(p.expr()?)
                } else if p.eat_kw(Kw::After) {
                    let (n, n_pos) = p.number("a delay in seconds")?;
                    if n <= Decimal::ZERO {
                        let message =
                            format!("timed edge {from} -> {to} needs a positive delay");
                        p.semantic("E031", message, n_pos);
                    }
                    EdgeMode::Timed(n)
                } else {
                    EdgeMode::Immediate
                };
                graph.edges.push(BehaviorEdge { from, to, mode, pos: from_pos });
            }
            TokenKind::RBrace => {
                p.bump();
                break;
            }
            _ => {
                return Err(p.error(format!(
                    "expected 'start', an event id, or '}}', found {}",
                    p.peek()
                )))
            }
        }
    }
    p.expect_eof()?;
    if graph.starts.is_empty() {
        p.semantic("E032", "behavior declares no start binding".to_string(), header_pos);
    }
    Ok(graph)
}

// ---- scenarios (.tms) ----

/// Parses a `.tms` scenario file against its model.
pub fn parse_scenario(file: &str, text: &str, model: &StaticModel) -> Result<Scenario, Vec<Diagnostic>> {
    let mut p = Parser::new(file, text).map_err(|d| vec![d])?;
    match scenario_file(&mut p, model) {
        Ok(scenario) if p.diags.is_empty() => Ok(scenario),
        Ok(_) => {
            sort_diagnostics(&mut p.diags);
            Err(p.diags)
        }
        Err(diag) => Err(vec![diag]),
    }
}

fn scenario_file(p: &mut Parser, model: &StaticModel) -> Syntax<Scenario> {
    p.expect_kw(Kw::Scenario)?;
    let (name, _) = p.ident("a scenario name")?;
    let for_pos = p.word("for")?;
    let (for_name, _) = p.ident("a model name")?;
    if for_name != model.name {
        let message =
            format!("scenario is for '{for_name}' but the model is '{}'", model.name);
        p.semantic("E003", message, for_pos);
    }
    p.expect(TokenKind::LBrace, "'{'")?;
    let mut scenario = Scenario { name, model_name: for_name, stimuli: Vec::new() };
    loop {
        match p.peek() {
            TokenKind::Ident(w) if w == "at" => {
                let pos = p.bump().pos;
                let (at, at_pos) = p.number("a time in seconds")?;
                if at.is_negative() {
                    p.semantic("E041", "stimulus time must not be negative".to_string(), at_pos);
                }
                p.expect(TokenKind::Colon, "':'")?;
                p.expect_kw(Kw::Inject)?;
                let (target, target_pos) = p.qref("a transfer stage reference")?;
                let target = match model.resolve(&target) {
                    Some(Resolution::Stage { stage, .. }) if stage.kind == StageKind::Transfer => {
                        model.canonical(&target).expect("resolved")
                    }
                    _ => {
                        let message =
                            format!("inject target '{target}' is not a transfer stage");
                        p.semantic("E040", message, target_pos);
                        target
                    }
                };
                p.expect(TokenKind::LBrace, "'{'")?;
                let mut fields: Vec<(String, Value)> = Vec::new();
                while p.peek() != &TokenKind::RBrace {
                    let (field, field_pos) = p.ident("a field name")?;
                    p.expect(TokenKind::Assign, "'='")?;
                    let (value, _) = p.literal("a number or text value")?;
                    if fields.iter().any(|(n, _)| n == &field) {
                        let message = format!("duplicate field '{field}' in stimulus");
                        p.semantic("E010", message, field_pos);
                    } else {
                        fields.push((field, value));
                    }
                    p.list_comma();
                }
                p.bump(); // '}'
                let urgency = if p.eat_kw(Kw::Urgency) {
                    Some(p.text("an urgency label")?.0)
                } else {
                    None
                };
                scenario.stimuli.push(Stimulus { at, target, fields, urgency, pos });
            }
            TokenKind::RBrace => {
                p.bump();
                break;
            }
            _ => return Err(p.error(format!("expected 'at' or '}}', found {}", p.peek()))),
        }
    }
    p.expect_eof()?;
    Ok(scenario)
}

// ---- monitors (.tmm) ----

/// Parses a `.tmm` monitor file against its event layer.
pub fn parse_monitor(file: &str, text: &str, layer: &EventLayer) -> Result<MonitorSpec, Vec<Diagnostic>> {
    let mut p = Parser::new(file, text).map_err(|d| vec![d])?;
    match monitor_file(&mut p, layer) {
        Ok(spec) if p.diags.is_empty() => Ok(spec),
        Ok(_) => {
            sort_diagnostics(&mut p.diags);
            Err(p.diags)
        }
        Err(diag) => Err(vec![diag]),
    }
}

fn monitor_file(p: &mut Parser, layer: &EventLayer) -> Syntax<MonitorSpec> {
    let mut all_pos: Option<SourcePos> = None;
    let mut selections: Vec<Selection> = Vec::new();
    let file_pos = p.peek_pos();
    while p.peek() != &TokenKind::Eof {
        let pos = p.expect_kw(Kw::Monitor)?;
        if p.peek_word("all") {
            p.bump();
            if all_pos.is_some() {
                p.semantic("E044", "duplicate 'monitor all'".to_string(), pos.clone());
            }
            all_pos = Some(pos);
            continue;
        }
        let (template, template_pos) = p.text("a key template or 'all'")?;
        check_template(p, &template, &template_pos);
        p.word("on")?;
        p.expect(TokenKind::LBrace, "'{'")?;
        let mut events = Vec::new();
        let mut written = 0usize;
        while p.peek() != &TokenKind::RBrace {
            let (event, event_pos) = p.ident("an event id")?;
            written += 1;
            if layer.event(&event).is_none() {
                p.semantic("E043", format!("monitor references unknown event '{event}'"), event_pos);
            } else if !events.contains(&event) {
                events.push(event);
            }
            p.list_comma();
        }
        p.bump(); // '}'
        if written == 0 {
            p.semantic("E044", "monitor selects no events".to_string(), pos.clone());
        }
        p.expect_kw(Kw::Capture)?;
        p.expect(TokenKind::LBrace, "'{'")?;
        let mut captures = Vec::new();
        while p.peek() != &TokenKind::RBrace {
            let (capture, capture_pos) = p.ident("a payload field name")?;
            if captures.contains(&capture) {
                p.semantic("E010", format!("duplicate capture '{capture}'"), capture_pos);
            } else {
                captures.push(capture);
            }
            p.list_comma();
        }
        p.bump(); // '}'
        selections.push(Selection { key_template: template, events, captures, pos });
    }
    if let Some(pos) = all_pos {
        if !selections.is_empty() {
            p.semantic(
                "E044",
                "'monitor all' cannot be combined with selective monitors".to_string(),
                pos,
            );
        }
        return Ok(MonitorSpec::All);
    }
    if selections.is_empty() {
        p.semantic("E044", "monitor file declares no monitors".to_string(), file_pos);
        return Ok(MonitorSpec::All);
    }
    Ok(MonitorSpec::Selective(selections))
}

/// Template braces must pair up; field existence is checked at runtime
/// (T200), since payloads vary per occurrence.
fn check_template(p: &mut Parser, template: &str, pos: &SourcePos) {
    let mut open = false;
    for c in template.chars() {
        match (c, open) {
            ('{', false) => open = true,
            ('{', true) | ('}', false) => {
                let message = format!("key template '{template}' has unbalanced braces");
                p.semantic("E044", message, pos.clone());
                return;
            }
            ('}', true) => open = false,
            _ => {}
        }
    }
    if open {
        let message = format!("key template '{template}' has unbalanced braces");
        p.semantic("E044", message, pos.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> StaticModel {
        parse_model(
            "m.tm",
            r#"
            model Shop {
              thimac Counter {
                store till: number = 100
                thimac Drawer {
                  receive coin_in
                  process count = Counter.till + $amount into Counter.till
                  release done
                }
                transfer order_in
                receive take
                create receipt = "ok"
                release hand_over
              }
              thimac Door {
                transfer bell_out
              }
              flow Counter.order_in -> Counter.take
              flow Counter.take -> Counter.Drawer.coin_in
              flow Counter.Drawer.done -> Counter.hand_over
              trigger Counter.hand_over ~> Door.bell_out
            }
            "#,
        )
        .expect("model parses")
    }

    #[test]
    fn model_refs_are_canonicalized() {
        let shop = parse_model(
            "m.tm",
            r#"
            model Shop {
              thimac A { transfer out }
              thimac B { receive take }
              flow Shop.A.out -> B.take
            }
            "#,
        )
        .expect("parses");
        // Model-name aliases are stripped to plain dotted paths.
        assert_eq!(shop.flows[0].from.to_string(), "A.out");
        assert_eq!(shop.flows[0].to.to_string(), "B.take");
    }

    #[test]
    fn model_collects_duplicates_and_unresolved() {
        let errs = parse_model(
            "m.tm",
            r#"
            model Shop {
              thimac A {
                receive take
                process take
              }
              flow A.take -> A.nowhere
            }
            "#,
        )
        .expect_err("bad model");
        let codes: Vec<&str> = errs.iter().map(|d| d.code).collect();
        assert_eq!(codes, ["E010", "E011"]);
        assert!(errs[0].message.contains("duplicate name 'take'"));
        assert!(errs[1].message.contains("'A.nowhere'"));
    }

    #[test]
    fn assignment_rejected_on_release_stage() {
        let errs = parse_model(
            "m.tm",
            "model M { thimac A { release r = 1 } }",
        )
        .expect_err("assignment on release");
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, "E002");
        assert!(errs[0].message.contains("only create and process"));
    }

    #[test]
    fn stage_labels_and_optional_into() {
        let shop = model();
        let counter = &shop.roots[0];
        let receipt = counter.stage("receipt").expect("stage");
        assert!(receipt.assignment.as_ref().unwrap().into.is_none());
        let drawer = counter.child("Drawer").expect("child");
        let count = drawer.stage("count").expect("stage");
        let into = count.assignment.as_ref().unwrap().into.as_ref().unwrap();
        assert_eq!(into.to_string(), "Counter.till");
    }

    #[test]
    fn events_resolve_regions_and_payload_sources() {
        let shop = model();
        let layer = parse_events(
            "m.tme",
            r#"
            events for Shop {
              event E1 over { Counter.order_in, Counter.take }
              event E2 refines E1 over { Shop.Counter.Drawer.coin_in }
                lasts 30
                payload { amount: $amount, till: Counter.till }
            }
            "#,
            &shop,
        )
        .expect("events parse");
        assert_eq!(layer.events.len(), 2);
        let e2 = layer.event("E2").unwrap();
        assert_eq!(e2.region[0].to_string(), "Counter.Drawer.coin_in");
        assert_eq!(e2.duration, Decimal::from_int(30));
        assert_eq!(e2.payload_spec.len(), 2);
        match &e2.payload_spec[1].1 {
            PayloadSrc::Store(r) => assert_eq!(r.to_string(), "Counter.till"),
            other => panic!("expected store source, got {other:?}"),
        }
    }

    #[test]
    fn events_report_semantic_errors_in_position_order() {
        let shop = model();
        let errs = parse_events(
            "m.tme",
            r#"
            events for Shop {
              event E1 over { }
              event E2 refines E9 over { Counter.till }
              event E3 over { Counter.take } payload { x: Counter.missing }
            }
            "#,
            &shop,
        )
        .expect_err("bad events");
        let codes: Vec<&str> = errs.iter().map(|d| d.code).collect();
        assert_eq!(codes, ["E022", "E020", "E021", "E023"]);
        assert!(errs[2].message.contains("is a store, not a stage"));
    }

    #[test]
    fn events_for_clause_must_name_the_model() {
        let shop = model();
        let errs = parse_events("m.tme", "events for Other { event E1 over { Counter.take } }", &shop)
            .expect_err("wrong model name");
        assert_eq!(errs[0].code, "E003");
    }

    fn layer(shop: &StaticModel) -> EventLayer {
        parse_events(
            "m.tme",
            r#"
            events for Shop {
              event E1 over { Counter.order_in }
              event E2 over { Counter.take }
              event E3 over { Counter.hand_over }
            }
            "#,
            shop,
        )
        .expect("events parse")
    }

    #[test]
    fn behavior_parses_starts_guards_and_delays() {
        let shop = model();
        let graph = parse_behavior(
            "m.tmb",
            r#"
            behavior for Shop {
              start E1 on Counter.order_in
              E1 -> E2 when $kind == "cash" and Counter.till < 500
              E1 -> E3 after 120
              E2 -> E3
            }
            "#,
            &layer(&shop),
        )
        .expect("behavior parses");
        assert_eq!(graph.starts.len(), 1);
        assert_eq!(graph.edges.len(), 3);
        match &graph.edges[0].mode {
            EdgeMode::Guarded(g) => {
                assert_eq!(g.to_string(), "$kind == \"cash\" and Counter.till < 500");
            }
            other => panic!("expected guard, got {other:?}"),
        }
        assert_eq!(graph.edges[1].mode, EdgeMode::Timed(Decimal::from_int(120)));
        assert_eq!(graph.edges[2].mode, EdgeMode::Immediate);
    }

    #[test]
    fn behavior_semantic_errors() {
        let shop = model();
        let lay = layer(&shop);
        let errs = parse_behavior(
            "m.tmb",
            "behavior for Shop { E1 -> E9 E1 -> E2 after 0 }",
            &lay,
        )
        .expect_err("bad behavior");
        let codes: Vec<&str> = errs.iter().map(|d| d.code).collect();
        // Unknown event, non-positive delay, and no start binding at all.
        assert_eq!(codes, ["E032", "E030", "E031"]);
    }

    #[test]
    fn scenario_checks_targets_and_times() {
        let shop = model();
        let scenario = parse_scenario(
            "m.tms",
            r#"
            scenario s1 for Shop {
              at 0: inject Counter.order_in { kind = "cash", amount = 12.50 }
              at 4.25: inject Shop.Counter.order_in { kind = "card" } urgency "high"
            }
            "#,
            &shop,
        )
        .expect("scenario parses");
        assert_eq!(scenario.stimuli.len(), 2);
        assert_eq!(scenario.stimuli[0].fields[1].1, Value::Number(Decimal::from_hundredths(1250)));
        assert_eq!(scenario.stimuli[1].target.to_string(), "Counter.order_in");
        assert_eq!(scenario.stimuli[1].urgency.as_deref(), Some("high"));

        let errs = parse_scenario(
            "m.tms",
            r#"
            scenario s2 for Shop {
              at -1: inject Counter.take { }
            }
            "#,
            &shop,
        )
        .expect_err("bad scenario");
        let codes: Vec<&str> = errs.iter().map(|d| d.code).collect();
        assert_eq!(codes, ["E041", "E040"]);
        assert!(errs[1].message.contains("not a transfer stage"));
    }

    #[test]
    fn monitor_all_and_selective_forms() {
        let shop = model();
        let lay = layer(&shop);
        assert_eq!(parse_monitor("m.tmm", "monitor all", &lay).unwrap(), MonitorSpec::All);

        let spec = parse_monitor(
            "m.tmm",
            r#"
            monitor "{kind}.sale" on { E2, E3 } capture { kind, amount }
            "#,
            &lay,
        )
        .expect("monitor parses");
        match spec {
            MonitorSpec::Selective(sels) => {
                assert_eq!(sels.len(), 1);
                assert_eq!(sels[0].key_template, "{kind}.sale");
                assert_eq!(sels[0].events, ["E2", "E3"]);
                assert_eq!(sels[0].captures, ["kind", "amount"]);
            }
            MonitorSpec::All => panic!("expected selective"),
        }
    }

    #[test]
    fn monitor_rejects_malformed_specs() {
        let shop = model();
        let lay = layer(&shop);
        let cases = [
            ("", "E044"),
            ("monitor all\nmonitor \"k\" on { E1 } capture { x }", "E044"),
            ("monitor \"{open\" on { E1 } capture { x }", "E044"),
            ("monitor \"k\" on { } capture { x }", "E044"),
            ("monitor \"k\" on { E9 } capture { x }", "E043"),
        ];
        for (text, code) in cases {
            let errs = parse_monitor("m.tmm", text, &lay).expect_err("malformed monitor");
            assert_eq!(errs[0].code, code, "for {text:?}");
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let errs = parse_model("m.tm", "model M {\n  thimac A {\n    weave x\n  }\n}").expect_err("bad");
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, "E002");
        assert_eq!((errs[0].pos.line, errs[0].pos.col), (3, 5));
        assert!(errs[0].message.contains("expected a stage kind"));
    }

    #[test]
    fn guard_expression_precedence() {
        let shop = model();
        let graph = parse_behavior(
            "m.tmb",
            r#"
            behavior for Shop {
              start E1 on Counter.order_in
              E1 -> E2 when $a + 1 - 2 == $b or $c < 3 and $d != "x"
            }
            "#,
            &layer(&shop),
        )
        .expect("parses");
        let EdgeMode::Guarded(g) = &graph.edges[0].mode else { panic!("guard") };
        // Additive binds tightest, then comparisons, then and, then or.
        assert_eq!(g.to_string(), "$a + 1 - 2 == $b or $c < 3 and $d != \"x\"");
    }
}
