use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sensitive group {group} has no members")]
    EmptyGroup { group: u8 },

    #[error("dataset needs at least 2 rows, got {0}")]
    TooFewRows(usize),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient vector has zero norm")]
    ZeroCoefficient,

    #[error("invalid cost parameters: {0}")]
    InvalidCost(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inner objective is unbounded below (value {value:e})")]
    Unbounded { value: f64 },

    #[error("inner minimization did not converge in {iters} iterations (gradient norm {grad_norm:e})")]
    MaxIters { iters: usize, grad_norm: f64 },

    #[error("no finite maximizer of the dual objective after {doublings} bracket doublings")]
    BracketFailure { doublings: usize },

    #[error("dual objective violated concavity at {violations} sampled points")]
    NotConcave { violations: usize },

    #[error("discrepancy gradient is identically zero")]
    ZeroGradient,

    #[error("statistic must be non-negative, got {0}")]
    NegativeStatistic(f64),

    #[error("eta must lie in [0, 1], got {0}")]
    EtaOutOfRange(f64),

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("labels have zero mean absolute value")]
    ZeroLabelScale,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("median split of `{0}` leaves one side empty")]
    DegenerateSplit(String),

    #[error("transform {transform} is undefined for value {value} in column `{column}`")]
    TransformDomain {
        column: String,
        transform: String,
        value: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical solvers, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Unbounded { .. }
                | Error::MaxIters { .. }
                | Error::BracketFailure { .. }
                | Error::NotConcave { .. }
                | Error::ZeroGradient
                | Error::SingularDesign
        )
    }
}
