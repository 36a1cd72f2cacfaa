use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("permutation length {0} outside supported range 2..=12")]
    UnsupportedLength(usize),
    #[error("not a permutation: {0}")]
    InvalidPermutation(String),
    #[error("rank {rank} out of range for m = {m}")]
    RankOutOfRange { rank: u64, m: usize },
    #[error("factorial of {0} overflows 64 bits")]
    FactorialOverflow(u64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("unsupported neighbor distance {0} (expected 2 or 3)")]
    UnsupportedDistance(usize),
    #[error("invalid subset: {0}")]
    InvalidSubset(String),
    #[error("symbol {symbol} out of range for subset of size {size}")]
    SymbolOutOfRange { symbol: u64, size: u64 },
    #[error("permutation {0} is not a member of the subset")]
    NotInSubset(String),
    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: u64,
        budget: u64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("invalid frequency mapping: {0}")]
    InvalidMapping(String),
}

pub type Result<T> = std::result::Result<T, Error>;
