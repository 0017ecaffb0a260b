use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode index {mode} out of range for a {modes}-mode space")]
    ModeIndex { mode: usize, modes: usize },

    #[error("occupation {level} on mode {mode} exceeds truncation (levels 0..{truncation})")]
    Occupation {
        mode: usize,
        level: usize,
        truncation: usize,
    },

    #[error(
        "coherent state |alpha| = {abs_alpha:.4} leaks {tail:.2e} beyond level {truncation_minus_one}; \
         truncation of at least {required} is required"
    )]
    CoherentTail {
        abs_alpha: f64,
        tail: f64,
        truncation_minus_one: usize,
        required: usize,
    },

    #[error("dense dimension {dim} exceeds the cap of {cap}")]
    Scale { dim: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid extent: {0}")]
    Extent(String),

    #[error("measure mismatch: {0}")]
    Measure(String),

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("conditioning error: {0}")]
    Conditioning(String),
}

impl Error {
    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }
}
