//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced while loading problems or running the solver.
#[derive(Debug, Error)]
pub enum CqeError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed FCIDUMP or config input; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Inconsistent problem data (electron counts, spin, sizes).
    #[error("invalid problem: {0}")]
    Invalid(String),

    /// A residual element came out with a non-negligible imaginary part,
    /// which signals a broken operator or state construction.
    #[error("residual element {index} is not real (imaginary part {imag:.3e})")]
    ComplexResidual { index: usize, imag: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, CqeError>;
