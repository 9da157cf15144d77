//! Codec-level error type shared by the three code families.

use thiserror::Error;

use crate::ffield::FieldError;
use crate::matfq::MatError;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),
    #[error("bad field override: {0}")]
    BadFieldOverride(String),
    #[error("field too small: {0}")]
    FieldTooSmall(String),
    #[error("message length {got} does not match B = {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("node {node} out of range 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("a node cannot act as its own repair helper")]
    SelfHelp,
    #[error("expected {expected} distinct helpers, got {got}")]
    BadHelperCount { expected: usize, got: usize },
    #[error("expected {expected} distinct nodes, got {got}")]
    BadNodeCount { expected: usize, got: usize },
    #[error("repair matrix is singular: stored shares are inconsistent with the code")]
    SingularRepairMatrix,
    #[error("node {0} is not served by this repair branch")]
    WrongBranch(usize),
    #[error("basis vectors are linearly dependent")]
    DependentBasis,
    #[error("chosen blocks do not span the message space")]
    RankDeficient,
    #[error("generator shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("internal consistency failure: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Matrix(#[from] MatError),
}
