use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid dimension {d}: {reason}")]
    InvalidDimension { d: usize, reason: String },

    #[error("invalid index {index}: {reason}")]
    InvalidIndex { index: usize, reason: String },

    #[error("invalid dimension grid: {0}")]
    InvalidGrid(String),

    #[error("sphericity undefined: eigenvalues from index {k} on are all zero")]
    UndefinedSphericity { k: usize },

    #[error("eigenvector {j} is not tracked by this model at dimension {d}")]
    UnsupportedEigenvector { j: usize, d: usize },

    #[error("vector is not a unit vector (norm {norm})")]
    NotUnitVector { norm: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("rank deficiency: direction {index} has dual eigenvalue {value:e} below threshold {threshold:e}")]
    RankDeficient {
        index: usize,
        value: f64,
        threshold: f64,
    },

    #[error("unsupported spike structure: {0}")]
    UnsupportedStructure(String),

    #[error("boundary case unsupported: {0}")]
    BoundaryUnsupported(String),

    #[error("insufficient data: {got} samples, at least {need} required")]
    InsufficientData { got: usize, need: usize },

    #[error("{failures} of {replicates} replicates failed at d={d}, n={n} (limit 5%)")]
    ExcessiveFailures {
        d: usize,
        n: usize,
        failures: usize,
        replicates: usize,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
