//! Recursive-descent parser producing a flat list of statements.
//!
//! ```text
//! line      := group | statement | (empty)
//! group     := "group" ":" INTEGER
//! statement := IDENT ("=~" | "~~") term ("+" term)*
//! term      := (modifier "*")* IDENT
//! modifier  := ["-"] NUMBER | IDENT | "start" "(" ["-"] NUMBER ")"
//! ```
//! A line ending in `+` or an operator continues on the next line.

use super::lexer::{Tok, Token};
use super::{Diagnostic, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    Measured,
    Covaries,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Modifier {
    Fixed(f64),
    Label(String),
    Start(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Term {
    pub modifiers: Vec<(Modifier, Pos)>,
    pub var: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Statement {
    pub lhs: String,
    pub lhs_pos: Pos,
    pub op: Op,
    pub terms: Vec<Term>,
    /// Zero-based group index, or `None` for statements before any header.
    pub group: Option<usize>,
}

pub(crate) struct Parser<'a> {
    toks: &'a [Token],
    at: usize,
    pub diags: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        Parser {
            toks,
            at: 0,
            diags: Vec::new(),
        }
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.at)
    }

    fn peek_tok(&self, k: usize) -> Option<&'a Tok> {
        self.toks.get(self.at + k).map(|t| &t.tok)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.at);
        self.at += 1;
        t
    }

    fn last_pos(&self) -> Pos {
        let i = self.at.saturating_sub(1).min(self.toks.len().saturating_sub(1));
        self.toks.get(i).map(|t| t.pos).unwrap_or(Pos { line: 1, column: 1 })
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek_tok(0), Some(Tok::Newline)) {
            self.at += 1;
        }
    }

    fn skip_to_line_end(&mut self) {
        while let Some(t) = self.bump() {
            if t.tok == Tok::Newline {
                break;
            }
        }
    }

    /// Parses the whole token stream. `n_groups` bounds `group:` headers.
    pub fn parse(&mut self, n_groups: usize) -> Vec<Statement> {
        let mut out = Vec::new();
        let mut group = None;
        loop {
            self.skip_newlines();
            let Some(t) = self.peek() else { break };
            match &t.tok {
                Tok::Ident(name) if name == "group" && self.peek_tok(1) == Some(&Tok::Colon) => {
                    if let Some(g) = self.group_header(n_groups) {
                        group = Some(g);
                    }
                }
                Tok::Ident(_) => {
                    if let Some(s) = self.statement(group) {
                        out.push(s);
                    }
                }
                _ => {
                    self.diags
                        .push(Diagnostic::error(t.pos, "expected a variable name at start of statement"));
                    self.skip_to_line_end();
                }
            }
        }
        out
    }

    fn group_header(&mut self, n_groups: usize) -> Option<usize> {
        let kw = self.bump()?.pos;
        self.bump(); // colon
        let t = self.bump();
        let result = match t.map(|t| (&t.tok, t.pos)) {
            Some((Tok::Number(v), pos)) => {
                if v.fract() != 0.0 || *v < 1.0 {
                    self.diags
                        .push(Diagnostic::error(pos, "group number must be a positive integer"));
                    None
                } else if *v as usize > n_groups {
                    self.diags.push(Diagnostic::error(
                        pos,
                        format!("group {} exceeds the declared group count {n_groups}", *v as usize),
                    ));
                    None
                } else {
                    Some(*v as usize - 1)
                }
            }
            _ => {
                self.diags.push(Diagnostic::error(kw, "expected `group: <number>`"));
                None
            }
        };
        if !matches!(t.map(|t| &t.tok), Some(Tok::Newline) | None) {
            self.expect_line_end();
        }
        result
    }

    fn expect_line_end(&mut self) {
        match self.peek() {
            None => {}
            Some(t) if t.tok == Tok::Newline => {
                self.at += 1;
            }
            Some(t) => {
                self.diags
                    .push(Diagnostic::error(t.pos, "unexpected input after end of statement"));
                self.skip_to_line_end();
            }
        }
    }

    fn statement(&mut self, group: Option<usize>) -> Option<Statement> {
        let lhs_tok = self.bump()?;
        let Tok::Ident(lhs) = &lhs_tok.tok else {
            unreachable!("statement starts with an identifier")
        };
        let op = match self.peek() {
            Some(Token { tok: Tok::Measured, .. }) => Op::Measured,
            Some(Token { tok: Tok::Covaries, .. }) => Op::Covaries,
            Some(Token { tok: Tok::Regress, pos }) => {
                self.diags.push(Diagnostic::error(
                    *pos,
                    "regression operator `~` is not supported (use `=~` or `~~`)",
                ));
                self.skip_to_line_end();
                return None;
            }
            Some(t) if t.tok != Tok::Newline => {
                self.diags.push(Diagnostic::error(t.pos, "expected `=~` or `~~`"));
                self.skip_to_line_end();
                return None;
            }
            _ => {
                self.diags
                    .push(Diagnostic::error(lhs_tok.pos, format!("`{lhs}` is not followed by an operator")));
                self.skip_to_line_end();
                return None;
            }
        };
        self.at += 1;
        self.skip_newlines();
        let mut terms = Vec::new();
        loop {
            match self.term() {
                Some(t) => terms.push(t),
                None => {
                    self.skip_to_line_end();
                    return None;
                }
            }
            match self.peek_tok(0) {
                Some(Tok::Plus) => {
                    self.at += 1;
                    self.skip_newlines();
                }
                _ => break,
            }
        }
        let before = self.diags.len();
        self.expect_line_end();
        if self.diags.len() != before {
            return None;
        }
        Some(Statement {
            lhs: lhs.clone(),
            lhs_pos: lhs_tok.pos,
            op,
            terms,
            group,
        })
    }

    fn term(&mut self) -> Option<Term> {
        let start = match self.peek() {
            Some(t) if t.tok != Tok::Newline => t.pos,
            _ => {
                self.diags.push(Diagnostic::error(self.last_pos(), "expected a term"));
                return None;
            }
        };
        let mut modifiers = Vec::new();
        loop {
            let t = self.peek()?;
            match &t.tok {
                Tok::Ident(name) if name == "start" && self.peek_tok(1) == Some(&Tok::LParen) => {
                    let pos = t.pos;
                    self.at += 2;
                    let v = self.signed_number()?;
                    if self.peek_tok(0) != Some(&Tok::RParen) {
                        self.diags.push(Diagnostic::error(self.last_pos(), "expected `)`"));
                        return None;
                    }
                    self.at += 1;
                    modifiers.push((Modifier::Start(v), pos));
                    self.expect_star()?;
                }
                Tok::Ident(name) => {
                    let pos = t.pos;
                    self.at += 1;
                    if self.peek_tok(0) == Some(&Tok::Star) {
                        self.at += 1;
                        modifiers.push((Modifier::Label(name.clone()), pos));
                    } else {
                        return Some(Term {
                            modifiers,
                            var: name.clone(),
                            pos: start,
                        });
                    }
                }
                Tok::Number(_) | Tok::Minus => {
                    let pos = t.pos;
                    let v = self.signed_number()?;
                    modifiers.push((Modifier::Fixed(v), pos));
                    self.expect_star()?;
                }
                _ => {
                    self.diags.push(Diagnostic::error(t.pos, "expected a variable name or modifier"));
                    return None;
                }
            }
        }
    }

    fn signed_number(&mut self) -> Option<f64> {
        let mut sign = 1.0;
        if self.peek_tok(0) == Some(&Tok::Minus) {
            sign = -1.0;
            self.at += 1;
        }
        match self.peek() {
            Some(Token {
                tok: Tok::Number(v), ..
            }) => {
                self.at += 1;
                Some(sign * v)
            }
            Some(t) => {
                self.diags.push(Diagnostic::error(t.pos, "expected a number"));
                None
            }
            None => {
                self.diags.push(Diagnostic::error(self.last_pos(), "expected a number"));
                None
            }
        }
    }

    fn expect_star(&mut self) -> Option<()> {
        if self.peek_tok(0) == Some(&Tok::Star) {
            self.at += 1;
            Some(())
        } else {
            let pos = match self.peek() {
                Some(t) if t.tok != Tok::Newline => t.pos,
                _ => self.last_pos(),
            };
            self.diags.push(Diagnostic::error(pos, "expected `*` after modifier"));
            None
        }
    }
}
