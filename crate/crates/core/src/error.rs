use thiserror::Error;

/// Errors raised by the numerical kernels and the estimators built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank deficient: diagonal entry {value:e} below threshold {threshold:e} in column {column}")]
    RankDeficient {
        column: usize,
        value: f64,
        threshold: f64,
    },

    #[error("SVD did not converge within {sweeps} Jacobi sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("invalid Schur specification: {0}")]
    InvalidSpec(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("cost {cost} exceeds configured budget {cap}")]
    BudgetExceeded { cost: u64, cap: u64 },

    #[error("subspace propagation degenerated at t = {t}")]
    StepUnstable { t: f64 },

    #[error("frequency ratio omega[{j}]/omega[{i}] is close to {p}/{q}")]
    RationalityDetected {
        i: usize,
        j: usize,
        p: u64,
        q: u64,
    },

    #[error("{p} and {q} are not coprime")]
    NotCoprime { p: u64, q: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line driver.
    ///
    /// 2 for bad input, 3 for numerical failure, 4 for an exhausted budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch(_)
            | Error::InvalidBlock(_)
            | Error::InvalidSpec(_)
            | Error::NonFinite { .. }
            | Error::NotCoprime { .. }
            | Error::InvalidInput(_) => 2,
            Error::RankDeficient { .. }
            | Error::NoConvergence { .. }
            | Error::SingularMatrix { .. }
            | Error::StepUnstable { .. }
            | Error::RationalityDetected { .. } => 3,
            Error::BudgetExceeded { .. } => 4,
        }
    }
}
