use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sphere: {0}")]
    InvalidSphere(String),

    #[error("grid shape mismatch: expected {expected} cells, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("probability {value} at cell {cell} is outside [0, 1]")]
    InvalidProbability { cell: usize, value: f64 },

    #[error("K = {k} exceeds the {cells} cells of the grid")]
    TooManyPositives { k: usize, cells: usize },

    #[error("positive cell {cell} has no matched ground-truth sphere")]
    MissingMatch { cell: usize },

    #[error("decoded radius {radius} at cell {cell} is not positive")]
    NonPositiveRadius { cell: usize, radius: f64 },

    #[error("FROC needs at least one annotation")]
    NoAnnotations,

    #[error("FROC needs at least one scan")]
    NoScans,

    #[error("unknown loss kind `{0}`")]
    UnknownLossKind(String),

    #[error("could not place {wanted} non-overlapping nodules after {attempts} attempts")]
    InfeasiblePacking { wanted: usize, attempts: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}, line {line}: {message}", path = path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("malformed grid file {path}: {message}")]
    GridFile { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
