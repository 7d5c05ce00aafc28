use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero polynomial")]
    ZeroPolynomial,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inconsistent linear system over F2")]
    Inconsistent,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("CSS condition violated: H_X * H_Z^T != 0")]
    CssViolation,

    #[error("uncorrectable residue leaked: residual error does not commute with the checks")]
    ResidueLeaked,

    #[error("{n_qpu} QPUs do not divide the {l} lattice columns; valid choices are {valid:?}")]
    InvalidPartition { l: usize, n_qpu: usize, valid: Vec<usize> },

    #[error("schedule conflict: {0}")]
    ScheduleConflict(String),

    #[error("fault at unknown circuit location {0}")]
    UnknownLocation(usize),

    #[error("rank-deficient model: syndrome is outside the column space of the check matrix")]
    RankDeficient,

    #[error("insufficient (p, alpha) coverage: {0}")]
    InsufficientCoverage(String),

    #[error("no break-even in bracket [{lo:e}, {hi:e}]")]
    NoBreakEven { lo: f64, hi: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
