use thiserror::Error;

/// Everything that can go wrong while building or checking a profile.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Exponents or rates outside the supported range.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no bracketing pair found in [2^-40, 2^40]: {0}")]
    BracketFailure(String),

    /// A midpoint stayed unclassifiable at the tightest tolerance tier.
    #[error("classification undetermined at beta = {beta}: {detail}")]
    Undetermined { beta: f64, detail: String },

    #[error("interface completion failed: {0}")]
    Completion(String),

    #[error("profile has no interface estimate (xi0 absent)")]
    MissingInterface,

    #[error("fit window holds {found} points, need at least {needed}")]
    Window { found: usize, needed: usize },

    #[error("operation requires the sub-critical case m + q < 2, got {0}")]
    Case(String),

    #[error("trajectory never enters the ball |(X,W,Z)| < {radius}")]
    Tail { radius: f64 },

    #[error("stencil leaves the smooth positivity region: {0}")]
    Region(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
