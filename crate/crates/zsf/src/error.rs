use num_bigint::BigUint;
use thiserror::Error;

/// Errors shared by every solver and helper in the crate.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("modulus must be an odd prime >= 3, got {0}")]
    NotPrime(BigUint),
    #[error("cannot invert zero residue")]
    NonInvertible,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("family is linearly independent, no dependency exists")]
    NoDependency,
    #[error("zero vector where a nonzero one is required")]
    ZeroVector,
    #[error("too few vectors: need {needed}, got {got}")]
    TooFewVectors { needed: BigUint, got: usize },
    #[error("coefficient map is trivial (all zero)")]
    TrivialInput,
    #[error("coefficient lift {lift} exceeds the stated bound {bound}")]
    NotZeroSumBounded { lift: String, bound: String },
    #[error("invalid k parameter: {0}")]
    BadK(String),
    #[error("too few groups: need {needed}, got {got}")]
    TooFewGroups { needed: usize, got: usize },
    #[error("no admissible sample combination found (input was not favorable)")]
    SampleFailure,
    #[error("insufficient input: {0}")]
    InsufficientInput(String),
    #[error("solve failed: {0}")]
    SolveFailed(String),
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error("k = {0} too large: permutation enumeration is capped at k = 8")]
    KTooLarge(usize),
    #[error("no sufficiently long arithmetic progression is guaranteed for this set")]
    NoLongAP,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("case dispatch failed for co-size {c}: {reason}")]
    CaseDispatchFailure { c: usize, reason: String },
    #[error("enumeration budget exceeded: needed {needed}, budget {budget}")]
    BudgetExceeded { needed: BigUint, budget: u64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
