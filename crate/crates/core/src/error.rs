use thiserror::Error;

use crate::vector::Shape;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: Shape, found: Shape },

    /// An iterate became NaN or infinite.
    #[error("iteration diverged at k={k}: {quantity} is not finite")]
    Divergence {
        quantity: &'static str,
        k: usize,
        last_good: Option<Box<crate::splitting::IterRecord>>,
    },

    /// A linear-algebra kernel failed (e.g. SVD did not converge).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no admissible epsilon pair for lambda={lambda}, alpha={alpha}")]
    Infeasible { lambda: f64, alpha: f64 },

    #[error("the envelope is undefined for alpha = 1")]
    EnvelopeUndefined,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
