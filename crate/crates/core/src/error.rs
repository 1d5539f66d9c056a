use thiserror::Error;

/// Structural and arithmetic errors shared by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: i128 },

    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),

    #[error("integer overflow")]
    Overflow,

    #[error("operation requires a nonzero vector")]
    ZeroVector,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("brute-force budget of {budget} candidates exceeded (needed {needed})")]
    BudgetExceeded { budget: u128, needed: u128 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
}

pub type Result<T> = std::result::Result<T, Error>;
