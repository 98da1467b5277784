use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point left its level's interval by more than the membership slack.
    #[error("point {x} outside the domain of level {level} (at step {step})")]
    Domain { x: f64, level: usize, step: usize },

    /// An iterative solver ran out of steps.
    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Family parameters outside their admissible range.
    #[error("degenerate parameters: {0}")]
    DegenerateParams(String),

    /// A boundary periodic point whose multiplier is too close to the unit circle to classify.
    #[error("boundary point {x} has multiplier {multiplier} within the ambiguity band around 1")]
    NumericalAmbiguity { x: f64, multiplier: f64 },

    /// A cycle failed re-verification.
    #[error("invalid restrictive cycle: {0}")]
    InvalidCycle(String),

    /// Normalization conditions drifted beyond what rescaling can absorb.
    #[error("precision exhausted at tower level {level}: normalization residual {residual:e}")]
    PrecisionExhausted { level: usize, residual: f64 },

    /// A bracket that does not contain a root.
    #[error("no solution in bracket: {0}")]
    NoSolutionInBracket(String),

    /// A solution realizing a different combinatorics than requested.
    #[error("wrong itinerary: {0}")]
    WrongItinerary(String),

    /// Collocation residual above the fit threshold.
    #[error("poor fit: collocation residual {residual:e} exceeds {threshold:e}")]
    PoorFit { residual: f64, threshold: f64 },

    /// The cycle found for a coefficient map has other combinatorics than requested.
    #[error("cycle mismatch: {0}")]
    CycleMismatch(String),

    #[error("eigen decomposition failed: {0}")]
    EigenFailure(String),

    /// Pulling a target interval back along the orbit left the monotone lap.
    #[error("pullback failure at level {level}, step {step}")]
    PullbackFailure { level: usize, step: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
