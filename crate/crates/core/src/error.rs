use thiserror::Error;

/// Errors raised by construction, evaluation, and solver routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input vector does not match the dimension fixed by the problem.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A constructor argument is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A stated hypothesis does not hold at the point of evaluation.
    /// The message names the violated inequality.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A vector contains NaN or infinite entries.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// Power iteration failed to reach the requested relative tolerance.
    #[error("power iteration did not converge within {max_iter} iterations (last estimate {estimate})")]
    PowerIteration { max_iter: usize, estimate: f64 },

    /// An iterative solve ran out of its iteration budget.
    #[error("solver did not converge: best residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    /// The integrated state left the finite range.
    #[error("trajectory diverged after t = {last_t}: {reason}")]
    Divergence { last_t: f64, reason: String },

    /// Seeded instance generation could not satisfy a structural safeguard.
    #[error("instance construction failed: {0}")]
    Construction(String),

    /// Mismatched companion data (e.g. oracle samples vs. trajectory samples).
    #[error("mismatched data: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
