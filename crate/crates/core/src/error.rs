use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("spin sector 2j = {two_j} is not available for {spins} spin-1/2 particles")]
    InvalidSector { two_j: u32, spins: u32 },

    #[error("{what} = {value} exceeds the enumeration limit of {limit}")]
    TooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("inequality has no local bound attached")]
    MissingLocalBound,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("undefined quantity: {0}")]
    Undefined(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
