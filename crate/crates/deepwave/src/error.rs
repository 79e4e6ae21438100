use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("grid mismatch: expected {expected}, got {got}")]
    GridMismatch { expected: String, got: String },

    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid argument `{name}`: {message}")]
    InvalidArgument { name: &'static str, message: String },

    #[error("carrier wavenumber {k} is not a grid frequency (lattice spacing {spacing})")]
    OffLatticeCarrier { k: f64, spacing: f64 },

    #[error("incommensurable scales: {0}")]
    Incommensurable(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("resonant frequencies inside kernel support: {0:?}")]
    Resonant(Vec<(f64, f64)>),

    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("decode error at byte {offset}: {message}")]
    Decode { offset: usize, message: String },

    #[error("missing required field `{0}`")]
    MissingField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn grid_mismatch(expected: impl std::fmt::Display, got: impl std::fmt::Display) -> Self {
        Error::GridMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            message: message.into(),
        }
    }
}
