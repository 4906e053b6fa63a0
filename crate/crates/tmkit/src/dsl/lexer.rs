//! Hand-rolled lexer shared by the five file-kind parsers. Produces a
//! flat token list with 1-based positions; the first lexical problem
//! aborts with an E001 diagnostic.

use std::fmt;

use crate::decimal::Decimal;
use crate::diag::{Diagnostic, SourcePos};

/// Reserved words. Everything else (including `for`, `over`, `on`, `at`,
/// `all`, `number`, `text`) stays an identifier and is matched by value
/// where the grammar expects it, so stages may reuse those names (the
/// bank model has a stage called `number`).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Kw {
    Model,
    Thimac,
    Create,
    Process,
    Release,
    Transfer,
    Receive,
    Store,
    Flow,
    Trigger,
    Events,
    Event,
    Refines,
    Payload,
    Lasts,
    Behavior,
    Start,
    When,
    After,
    Scenario,
    Inject,
    Urgency,
    Monitor,
    Capture,
    Into,
    And,
    Or,
}

impl Kw {
    fn from_ident(word: &str) -> Option<Kw> {
        Some(match word {
            "model" => Kw::Model,
            "thimac" => Kw::Thimac,
            "create" => Kw::Create,
            "process" => Kw::Process,
            "release" => Kw::Release,
            "transfer" => Kw::Transfer,
            "receive" => Kw::Receive,
            "store" => Kw::Store,
            "flow" => Kw::Flow,
            "trigger" => Kw::Trigger,
            "events" => Kw::Events,
            "event" => Kw::Event,
            "refines" => Kw::Refines,
            "payload" => Kw::Payload,
            "lasts" => Kw::Lasts,
            "behavior" => Kw::Behavior,
            "start" => Kw::Start,
            "when" => Kw::When,
            "after" => Kw::After,
            "scenario" => Kw::Scenario,
            "inject" => Kw::Inject,
            "urgency" => Kw::Urgency,
            "monitor" => Kw::Monitor,
            "capture" => Kw::Capture,
            "into" => Kw::Into,
            "and" => Kw::And,
            "or" => Kw::Or,
            _ => return None,
        })
    }

    pub fn text(self) -> &'static str {
        match self {
            Kw::Model => "model",
            Kw::Thimac => "thimac",
            Kw::Create => "create",
            Kw::Process => "process",
            Kw::Release => "release",
            Kw::Transfer => "transfer",
            Kw::Receive => "receive",
            Kw::Store => "store",
            Kw::Flow => "flow",
            Kw::Trigger => "trigger",
            Kw::Events => "events",
            Kw::Event => "event",
            Kw::Refines => "refines",
            Kw::Payload => "payload",
            Kw::Lasts => "lasts",
            Kw::Behavior => "behavior",
            Kw::Start => "start",
            Kw::When => "when",
            Kw::After => "after",
            Kw::Scenario => "scenario",
            Kw::Inject => "inject",
            Kw::Urgency => "urgency",
            Kw::Monitor => "monitor",
            Kw::Capture => "capture",
            Kw::Into => "into",
            Kw::And => "and",
            Kw::Or => "or",
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum TokenKind {
    Ident(String),
    Number(Decimal),
    Text(String),
    /// `$name`: a stimulus payload field reference.
    Field(String),
    Kw(Kw),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Dot,
    /// `->`
    Arrow,
    /// `~>`
    TriggerArrow,
    /// `=`
    Assign,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "'{s}'"),
            TokenKind::Number(n) => write!(f, "number {}", n.compact()),
            TokenKind::Text(_) => f.write_str("text literal"),
            TokenKind::Field(s) => write!(f, "'${s}'"),
            TokenKind::Kw(k) => write!(f, "'{}'", k.text()),
            TokenKind::LBrace => f.write_str("'{'"),
            TokenKind::RBrace => f.write_str("'}'"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
            TokenKind::Colon => f.write_str("':'"),
            TokenKind::Comma => f.write_str("','"),
            TokenKind::Dot => f.write_str("'.'"),
            TokenKind::Arrow => f.write_str("'->'"),
            TokenKind::TriggerArrow => f.write_str("'~>'"),
            TokenKind::Assign => f.write_str("'='"),
            TokenKind::Eq => f.write_str("'=='"),
            TokenKind::Ne => f.write_str("'!='"),
            TokenKind::Lt => f.write_str("'<'"),
            TokenKind::Le => f.write_str("'<='"),
            TokenKind::Gt => f.write_str("'>'"),
            TokenKind::Ge => f.write_str("'>='"),
            TokenKind::Plus => f.write_str("'+'"),
            TokenKind::Minus => f.write_str("'-'"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: SourcePos,
}

struct Lexer<'a> {
    file: &'a str,
    chars: Vec<char>,
    at: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn pos(&self) -> SourcePos {
        SourcePos::new(self.file, self.line, self.col)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.at + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.at += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, pos: SourcePos, message: impl Into<String>) -> Diagnostic {
        Diagnostic::error("E001", message, pos)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self, pos: SourcePos) -> Result<TokenKind, Diagnostic> {
        let mut digits = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                digits.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
            digits.push('.');
            self.bump();
            let mut fraction = 0;
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    digits.push(c);
                    fraction += 1;
                    self.bump();
                } else {
                    break;
                }
            }
            if fraction > 2 {
                return Err(self.error(pos, "number has more than two fractional digits"));
            }
        }
        match digits.parse::<Decimal>() {
            Ok(d) => Ok(TokenKind::Number(d)),
            Err(e) => Err(self.error(pos, format!("bad number literal: {e}"))),
        }
    }

    fn text(&mut self, pos: SourcePos) -> Result<TokenKind, Diagnostic> {
        self.bump(); // opening quote
        let mut s = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error(pos, "unterminated text literal")),
                Some('\n') => return Err(self.error(pos, "unterminated text literal")),
                Some('"') => {
                    self.bump();
                    return Ok(TokenKind::Text(s));
                }
                Some('\\') => {
                    self.bump();
                    let esc_pos = self.pos();
                    match self.bump() {
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some(c) => {
                            return Err(
                                self.error(esc_pos, format!("unknown escape sequence '\\{c}'"))
                            )
                        }
                        None => return Err(self.error(pos, "unterminated text literal")),
                    }
                }
                Some(_) => s.push(self.bump().expect("peeked")),
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, Diagnostic> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.peek() else {
            return Ok(Token { kind: TokenKind::Eof, pos });
        };
        let kind = match c {
            'a'..='z' | 'A'..='Z' | '_' => {
                let word = self.word();
                match Kw::from_ident(&word) {
                    Some(kw) => TokenKind::Kw(kw),
                    None => TokenKind::Ident(word),
                }
            }
            '0'..='9' => self.number(pos.clone())?,
            '"' => self.text(pos.clone())?,
            '$' => {
                self.bump();
                match self.peek() {
                    Some(c) if c.is_ascii_alphabetic() || c == '_' => TokenKind::Field(self.word()),
                    _ => return Err(self.error(pos, "expected a field name after '$'")),
                }
            }
            '{' => self.single(TokenKind::LBrace),
            '}' => self.single(TokenKind::RBrace),
            '(' => self.single(TokenKind::LParen),
            ')' => self.single(TokenKind::RParen),
            ':' => self.single(TokenKind::Colon),
            ',' => self.single(TokenKind::Comma),
            '.' => self.single(TokenKind::Dot),
            '+' => self.single(TokenKind::Plus),
            '-' => {
                self.bump();
                if self.peek() == Some('>') {
                    self.bump();
                    TokenKind::Arrow
                } else {
                    TokenKind::Minus
                }
            }
            '~' => {
                self.bump();
                if self.peek() == Some('>') {
                    self.bump();
                    TokenKind::TriggerArrow
                } else {
                    return Err(self.error(pos, "expected '>' after '~'"));
                }
            }
            '=' => {
                self.bump();
                if self.peek() == Some('=') {
                    self.bump();
                    TokenKind::Eq
                } else {
                    TokenKind::Assign
                }
            }
            '!' => {
                self.bump();
                if self.peek() == Some('=') {
                    self.bump();
                    TokenKind::Ne
                } else {
                    return Err(self.error(pos, "expected '=' after '!'"));
                }
            }
            '<' => {
                self.bump();
                if self.peek() == Some('=') {
                    self.bump();
                    TokenKind::Le
                } else {
                    TokenKind::Lt
                }
            }
            '>' => {
                self.bump();
                if self.peek() == Some('=') {
                    self.bump();
                    TokenKind::Ge
                } else {
                    TokenKind::Gt
                }
            }
            other => return Err(self.error(pos, format!("unexpected character '{other}'"))),
        };
        Ok(Token { kind, pos })
    }

    fn single(&mut self, kind: TokenKind) -> TokenKind {
        self.bump();
        kind
    }
}

/// Tokenizes `text`, stopping at the first lexical error.
pub fn lex(file: &str, text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lexer =
        Lexer { file, chars: text.chars().collect(), at: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();
    loop {
        let token = lexer.next_token()?;
        let done = token.kind == TokenKind::Eof;
        tokens.push(token);
        if done {
            return Ok(tokens);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        lex("t", text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn words_split_into_keywords_and_idents() {
        assert_eq!(
            kinds("model Bank thimac number text for"),
            vec![
                TokenKind::Kw(Kw::Model),
                TokenKind::Ident("Bank".into()),
                TokenKind::Kw(Kw::Thimac),
                TokenKind::Ident("number".into()),
                TokenKind::Ident("text".into()),
                TokenKind::Ident("for".into()),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn punctuation_and_operators() {
        assert_eq!(
            kinds("-> ~> = == != < <= > >= + - . , : { } ( )"),
            vec![
                TokenKind::Arrow,
                TokenKind::TriggerArrow,
                TokenKind::Assign,
                TokenKind::Eq,
                TokenKind::Ne,
                TokenKind::Lt,
                TokenKind::Le,
                TokenKind::Gt,
                TokenKind::Ge,
                TokenKind::Plus,
                TokenKind::Minus,
                TokenKind::Dot,
                TokenKind::Comma,
                TokenKind::Colon,
                TokenKind::LBrace,
                TokenKind::RBrace,
                TokenKind::LParen,
                TokenKind::RParen,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn numbers_strings_fields() {
        assert_eq!(
            kinds("12.50 0 \"a\\\"b\" $amount"),
            vec![
                TokenKind::Number("12.50".parse().unwrap()),
                TokenKind::Number(Decimal::ZERO),
                TokenKind::Text("a\"b".into()),
                TokenKind::Field("amount".into()),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(
            kinds("flow # to the end\nmodel"),
            vec![TokenKind::Kw(Kw::Flow), TokenKind::Kw(Kw::Model), TokenKind::Eof]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let tokens = lex("t", "model\n  Bank").unwrap();
        assert_eq!((tokens[0].pos.line, tokens[0].pos.col), (1, 1));
        assert_eq!((tokens[1].pos.line, tokens[1].pos.col), (2, 3));
    }

    #[test]
    fn lexical_errors_carry_e001() {
        for bad in ["1.234", "\"open", "\"a\nb\"", "@", "~x", "!x", "$1", "\"bad \\q esc\""] {
            let err = lex("t", bad).unwrap_err();
            assert_eq!(err.code, "E001", "{bad}: {}", err.message);
        }
    }

    #[test]
    fn dot_after_number_stays_a_dot() {
        // A trailing dot is not part of the number; it lexes separately.
        assert_eq!(
            kinds("3.foo"),
            vec![
                TokenKind::Number(Decimal::from_int(3)),
                TokenKind::Dot,
                TokenKind::Ident("foo".into()),
                TokenKind::Eof,
            ]
        );
    }
}
