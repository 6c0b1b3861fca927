use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space descriptor: {0}")]
    InvalidSpace(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("distance matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    AsymmetricDistance { i: usize, j: usize, a: f64, b: f64 },

    #[error("distance matrix violates {0}")]
    InvalidMetric(String),

    #[error("inadmissible scale {r}: must be at least {min}")]
    InadmissibleScale { r: f64, min: f64 },

    #[error("no admissible scale left in the grid")]
    EmptyScaleGrid,

    #[error("field has {got} values but the cloud has {expected} points")]
    FieldLength { expected: usize, got: usize },

    #[error("field contains a non-finite value at point {0}")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("energy-measure mode requires a graph Dirichlet form")]
    MissingForm,

    #[error("form kind {kind} does not match the cloud: {reason}")]
    KindMismatch { kind: String, reason: String },

    #[error("levels are not consecutive: {0}")]
    NonConsecutiveLevels(String),

    #[error("vertices {0} and {1} are not connected")]
    Disconnected(usize, usize),

    #[error("eigensolver did not converge: {0}")]
    EigenNotConverged(String),

    #[error("all fields are constant")]
    AllFieldsConstant,

    #[error("field {index} violates the energy cap: {value} > {cap}")]
    CapExceeded { index: usize, value: f64, cap: f64 },

    #[error("oracle energy is zero for a nonconstant field")]
    InconsistentOracle,

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
