use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent p = {0}; expected p >= 1 or infinity")]
    InvalidExponent(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("depth {depth} is insufficient; need at least {needed}")]
    DepthInsufficient { needed: u32, depth: u32 },

    #[error("depth mismatch: input depth {input} exceeds operator depth {operator}")]
    DepthMismatch { input: u32, operator: u32 },

    #[error("resolution exhausted: {0}")]
    ResolutionExhausted(String),

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("insufficient resolution: {atoms} atoms available, need at least {needed}")]
    InsufficientResolution { atoms: usize, needed: usize },

    #[error("sign search failed after {tries} tries (best norm {best}, bound {bound})")]
    SearchFailure { tries: usize, best: f64, bound: f64 },

    #[error("witness search failed: best image norm {best}, required {required}")]
    WitnessFailure { best: f64, required: f64 },

    #[error(
        "ascent stalled after {iterations} iterations (lambda estimate {lambda}, best ratio {best_ratio})"
    )]
    AscentStalled {
        iterations: usize,
        lambda: f64,
        best_ratio: f64,
    },

    #[error("underdetermined: {0}")]
    Underdetermined(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
