//! The `.pita` model format and the command-line interface.
//!
//! ```text
//! pita {
//!   params p1 p2;
//!   levels 2;
//!   level 1 { main x1; }
//!   level 2 { main x2; }
//!   state q0 level 1 init;
//!   state q1 level 2;
//!   state q2 level 2 final;
//!   trans q0 -> q1 on a when x1 < p1 do x2 := 0;
//!   trans q1 -> q2 on b when p2*x2 + x1 - 2 = 0 do x2 := (p1 - 4*p2^2)*x1 + p2;
//! }
//! ```

pub mod cli;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use crate::model::{desugar_policies, validate, Automaton, Policy};

pub use parser::{parse_model, parse_scope, parse_valuation};
pub use printer::print_model;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            span,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.span == Span::default() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)
        }
    }
}

/// A parsed model with source positions of its states and transitions.
#[derive(Clone, Debug)]
pub struct ModelDocument {
    /// As written, policies included.
    pub automaton: Automaton,
    pub state_spans: Vec<Span>,
    pub trans_spans: Vec<Span>,
}

impl ModelDocument {
    /// The automaton the analyses run on: timing policies desugared.
    pub fn core(&self) -> Automaton {
        if self
            .automaton
            .states
            .iter()
            .all(|s| s.policy == Policy::Lazy)
        {
            self.automaton.clone()
        } else {
            desugar_policies(&self.automaton)
        }
    }

    /// Structural violations of the desugared automaton, located in the
    /// source where possible.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let core = self.core();
        validate(&core)
            .violations
            .into_iter()
            .map(|v| {
                let span = self.locate(&core, &v.subject).unwrap_or_default();
                Diagnostic::new(span, v.to_string())
            })
            .collect()
    }

    fn locate(&self, core: &Automaton, subject: &str) -> Option<Span> {
        if let Some(rest) = subject.strip_prefix("transition ") {
            let idx: usize = rest.split_whitespace().next()?.parse().ok()?;
            return self.trans_spans.get(idx).copied();
        }
        let name = subject.strip_prefix("state ")?;
        let i = core.states.iter().position(|s| s.name == name)?;
        self.state_spans.get(i).copied()
    }
}
