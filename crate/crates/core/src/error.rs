//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Gram-Schmidt input is too close to degenerate to define a rotation.
    #[error("degenerate rotation: {0}")]
    DegenerateRotation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("model has no vertices")]
    EmptyModel,

    /// Total posterior mass N_P vanished; the variance update is undefined.
    #[error("degenerate posterior: N_P = {n_p:.3e}")]
    DegeneratePosterior { n_p: f64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("missing correspondence: {0}")]
    MissingCorrespondence(String),

    #[error("sample size k = {k} exceeds point count n = {n}")]
    KTooLarge { k: usize, n: usize },

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    /// The fit produced a non-finite energy; carries a dump of the iteration
    /// state for diagnosis.
    #[error("non-finite energy at EM iteration {iteration}: {detail}")]
    NonFiniteEnergy { iteration: usize, detail: String },

    #[error("parse error in {path} at {location}: {message}")]
    ParseError {
        path: String,
        location: String,
        message: String,
    },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the CLI maps this error to: 2 for I/O and file-format
    /// problems, 1 for everything else (validation failures).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_)
            | Error::ParseError { .. }
            | Error::UnsupportedFormat(_) => 2,
            _ => 1,
        }
    }
}
