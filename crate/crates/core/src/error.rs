//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("non-unit vector: norm {0} differs from 1 beyond tolerance")]
    NonUnit(f64),

    #[error("enumeration limit: exact norm needs an l1/linf codomain of dimension <= {limit}, got {dim}")]
    EnumerationLimit { dim: usize, limit: usize },

    #[error("net dimension limit: sphere nets are capped at dimension 6, got {0}")]
    NetDimensionLimit(usize),

    #[error("non-metric input: {0}")]
    NonMetric(String),

    #[error("increase codomain budget: {0}")]
    CodomainBudget(String),

    #[error("no dyadic suffix satisfies the tail rule: {0}")]
    NoDyadicSuffix(String),

    #[error("obstruction not established: {0}")]
    ObstructionNotEstablished(String),

    #[error("parameter chain infeasible: {0}")]
    ParameterChain(String),

    #[error("increase grid: LP fit error {err} exceeds tolerance {tol}")]
    IncreaseGrid { err: f64, tol: f64 },

    #[error("LP solver: {0}")]
    Lp(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("parse error at line {line}: {msg}")]
    ParseAt { line: usize, msg: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
