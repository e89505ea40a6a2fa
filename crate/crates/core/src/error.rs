use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tensor order {0} is outside the supported range 1..={max}", max = crate::tensor::MAX_ORDER)]
    OrderOutOfRange(usize),

    #[error("tensor dimension {0} is outside the supported range 1..={max}", max = crate::tensor::MAX_DIM)]
    DimOutOfRange(usize),

    #[error("index {index:?} out of range for a tensor of order {order} and dimension {dim}")]
    IndexOutOfRange { index: Vec<usize>, order: usize, dim: usize },

    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("result needs {needed} entries, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("tensor is not diagonal")]
    NotDiagonal,

    #[error("diagonal entry {index} is {value}, expected a strictly positive value")]
    NonpositiveDiagonal { index: usize, value: f64 },

    #[error("support enumeration needs an order-2 tensor, found order {0}")]
    OrderNotTwo(usize),

    #[error("support enumeration is limited to dimension {max}, found {found}")]
    TooLarge { found: usize, max: usize },

    #[error("omega has length {found}, the map expects {expected}")]
    OmegaDimMismatch { expected: usize, found: usize },

    #[error("omega map is empty at the queried point")]
    EmptyOmega,

    #[error("limit set of the omega map is empty")]
    EmptyLimitSet,

    #[error("direction must be nonzero")]
    ZeroDirection,

    #[error("direction has a negative component")]
    NegativeDirection,

    #[error("omega {0:?} is not recurrent along the ray")]
    NotRecurrent(Vec<f64>),

    #[error("contraction along the direction is not strictly positive (min component {0})")]
    NotStrictlyPositive(f64),

    #[error("rhs p(omega) is not strictly positive at omega {omega:?} (min component {min})")]
    NonpositiveRhs { omega: Vec<f64>, min: f64 },

    #[error("point is not in C' for the given omega")]
    NotInCprime,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid instance at `{path}`: {message}")]
    Invalid { path: String, message: String },

    #[error("unsupported schema version {0}")]
    UnsupportedSchema(u64),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_len(values: &[f64], expected: usize) -> Result<()> {
    if values.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            found: values.len(),
        })
    }
}
