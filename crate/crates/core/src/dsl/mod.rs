//! A small model-description language in the style of lavaan syntax.
//!
//! ```text
//! T1 =~ y1 + y2 + start(0.7)*y3     # loadings, free with start 0.5 unless given
//! M1 =~ 1*y1 + 1*y4                 # numeric prefix fixes the slot
//! T1 ~~ 1*T1 + rho12*T2             # (co)variances; a name prefix is a label
//! group: 2                          # following lines apply to group 2 only
//! ```
//!
//! Statements before the first `group:` header apply to every group in which
//! the named variables exist, and their parameters are shared across groups.
//! Statements inside a `group: k` block create parameters specific to group
//! `k` unless an explicit label ties them to others. Residual variances of all
//! observed variables are added as free parameters unless stated explicitly;
//! automatically added residual variances are shared across groups by
//! variable name. Loadings of the first indicator are never fixed
//! automatically.

mod build;
mod format;
mod lexer;
mod parser;
pub mod presets;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::ModelSpec;
use crate::scalar::Real;

pub use format::format_spec;

/// One-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
    pub severity: Severity,
}

impl Diagnostic {
    pub(crate) fn error(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            pos,
            message: message.into(),
            severity: Severity::Error,
        }
    }

    pub(crate) fn warning(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            pos,
            message: message.into(),
            severity: Severity::Warning,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}: {}", self.pos, self.message)
    }
}

/// Parse failure; holds every diagnostic (errors and warnings) in source order.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{}", render(.diagnostics))]
pub struct SyntaxError {
    pub diagnostics: Vec<Diagnostic>,
}

fn render(d: &[Diagnostic]) -> String {
    d.iter()
        .filter(|d| d.severity == Severity::Error)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Model text plus the number of groups it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSource {
    pub text: String,
    pub groups: usize,
    /// Observed variable names available per group (e.g. from a data header).
    /// When given, any other non-latent name is an unknown variable.
    pub observed: Option<Vec<Vec<String>>>,
}

impl ModelSource {
    /// Group count is taken from the highest `group:` header (at least 1).
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let groups = infer_groups(&text);
        ModelSource {
            text,
            groups,
            observed: None,
        }
    }

    pub fn with_groups(text: impl Into<String>, groups: usize) -> Self {
        ModelSource {
            text: text.into(),
            groups,
            observed: None,
        }
    }

    pub fn with_observed(mut self, observed: Vec<Vec<String>>) -> Self {
        self.observed = Some(observed);
        self
    }
}

fn infer_groups(text: &str) -> usize {
    let (toks, _) = lexer::tokenize(text);
    let mut max = 1;
    for w in toks.windows(3) {
        if let (lexer::Tok::Ident(g), lexer::Tok::Colon, lexer::Tok::Number(k)) = (&w[0].tok, &w[1].tok, &w[2].tok) {
            if g == "group" && k.fract() == 0.0 && *k >= 1.0 {
                max = max.max(*k as usize);
            }
        }
    }
    max
}

/// Parse result with warnings kept.
#[derive(Debug, Clone)]
pub struct ParseOutcome<T: Real> {
    pub spec: Option<ModelSpec<T>>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses model text into a validated [`ModelSpec`].
pub fn parse_model<T: Real>(src: &ModelSource) -> Result<ModelSpec<T>, SyntaxError> {
    let out = parse_model_verbose(src);
    match out.spec {
        Some(spec) => Ok(spec),
        None => Err(SyntaxError {
            diagnostics: out.diagnostics,
        }),
    }
}

/// Like [`parse_model`] but also returns warnings on success.
pub fn parse_model_verbose<T: Real>(src: &ModelSource) -> ParseOutcome<T> {
    let mut diagnostics = Vec::new();
    if src.text.trim().is_empty() {
        diagnostics.push(Diagnostic::error(Pos { line: 1, column: 1 }, "model text is empty"));
        return ParseOutcome { spec: None, diagnostics };
    }
    let groups = src.groups.max(1);
    let (toks, lex_diags) = lexer::tokenize(&src.text);
    diagnostics.extend(lex_diags);
    let mut p = parser::Parser::new(&toks);
    let stmts = p.parse(groups);
    diagnostics.extend(p.diags);
    let spec = if diagnostics.iter().any(|d| d.severity == Severity::Error) {
        None
    } else {
        let (spec, d) = build::build::<T>(&stmts, groups, src.observed.as_deref());
        diagnostics.extend(d);
        spec
    };
    diagnostics.sort_by_key(|d| d.pos);
    let failed = diagnostics.iter().any(|d| d.severity == Severity::Error);
    ParseOutcome {
        spec: if failed { None } else { spec },
        diagnostics,
    }
}
