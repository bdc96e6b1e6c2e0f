use alloc::boxed::Box;
use alloc::string::String;

use crate::comb::QuantumComb;

/// Errors raised by the comb library.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("label `{0}` appears more than once")]
    DuplicateLabel(String),
    #[error("unknown wire label `{0}`")]
    UnknownLabel(String),
    #[error("requested order is not a permutation of the operator's labels")]
    NotAPermutation,
    #[error("wire `{label}` has dimension {left} on one side and {right} on the other")]
    DimMismatch {
        label: String,
        left: usize,
        right: usize,
    },
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("matrix shape {rows}x{cols} does not match wire dimension {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("total dimension {dim} exceeds cap {cap}")]
    DimOverflow { dim: usize, cap: usize },
    #[error("operator is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("label `{0}` appears in three or more network parts")]
    TripleLabel(String),
    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: i64, max: i64 },
    #[error("expected at most {expected} slot inputs, got {got}")]
    SlotArityMismatch { expected: usize, got: usize },
    #[error("branch sum is not a deterministic comb (residual {residual:.3e})")]
    InvalidBranchSum { residual: f64 },
    #[error("design is exact up to degree {available}, degree {required} required")]
    DesignInsufficient { required: usize, available: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no valid dual bound: {0}")]
    BoundUnavailable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Option<Box<QuantumComb>>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
