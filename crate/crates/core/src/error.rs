use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix market input, line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A pivot was non-positive (or not finite). `index` is the scalar row of
    /// the failing pivot in the permuted matrix.
    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },

    #[error("factorization aborted by another worker")]
    Aborted,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
