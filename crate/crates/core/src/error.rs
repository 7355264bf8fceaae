use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("no converged physical mode at alpha = {alpha}, Re = {re}")]
    NoPhysicalMode { alpha: f64, re: f64 },

    #[error("adjoint eigenvalue {adjoint} does not match conj(c) = {expected} (distance {distance:.3e})")]
    AdjointMismatch {
        adjoint: num_complex::Complex64,
        expected: num_complex::Complex64,
        distance: f64,
    },

    #[error("resonance: 2iω0 lies within {margin:.3e} of the second-harmonic spectrum")]
    Resonance { margin: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("no unstable band at Re = {re}")]
    NoUnstableBand { re: f64 },

    #[error("no sign change in bracket [{lo}, {hi}]: {what}")]
    NoSignChange { lo: f64, hi: f64, what: String },

    #[error("at Re = {re}: {source}")]
    AtReynolds {
        re: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: String, iterations: usize },
}
