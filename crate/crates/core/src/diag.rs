//! Diagnostics and pipeline error types.

use crate::ast::Pos;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Parse,
    Validate,
    TypeCheck,
    Refine,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub phase: Phase,
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn error(phase: Phase, pos: Pos, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Error, phase, pos, message: message.into() }
    }

    pub fn warning(phase: Phase, pos: Pos, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, phase, pos, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let phase = match self.phase {
            Phase::Parse => "parse",
            Phase::Validate => "validate",
            Phase::TypeCheck => "typecheck",
            Phase::Refine => "refine",
        };
        write!(f, "{sev}[{phase}] {}: {}", self.pos, self.message)
    }
}

/// Errors raised after the foundation phases.
#[derive(Debug, Error)]
pub enum RefineError {
    #[error("no representation for domain of `{0}`: {1}")]
    NoRepresentation(String, String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("bubble left at a non-boolean position: {0}")]
    DanglingBubble(String),
    #[error("refinement diagnostic: {0}")]
    Diag(String),
}

/// Errors raised by the oracle.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("candidate space too large: {0}")]
    TooLarge(String),
    #[error("decode error: {0}")]
    Decode(String),
}
