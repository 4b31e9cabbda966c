use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("preconditioner M is singular (LU pivot below floor)")]
    SingularM,

    #[error("eigenvector basis V_r is singular; M^-1 A is not diagonalizable")]
    DefectiveEigenbasis,

    #[error("eigensolver did not converge")]
    EigenSolverFailed,

    #[error("complex eigenvalue {re}{im:+}i of a real pencil has no conjugate partner")]
    UnpairedConjugate { re: f64, im: f64 },

    #[error("coarse dimension {n_c} outside 1..={n}")]
    BadCoarseDim { n_c: usize, n: usize },

    #[error("real-valued transfers requested for a complex pencil")]
    NotRealPencil,

    #[error("real transfer column {column} keeps imaginary residue {residue:e}")]
    ResidualImaginary { column: usize, residue: f64 },

    #[error("basis change matrix is singular")]
    SingularBasisChange,

    #[error("N-norm matrix is not numerically positive definite")]
    CholeskyFailure,

    #[error("coarse operator R^* A P is singular")]
    SingularCoarseOperator,

    #[error("coarse projection is not idempotent (defect {defect:e})")]
    ProjectionDefect { defect: f64 },

    #[error("zero diagonal entry at row {index}")]
    ZeroDiagonal { index: usize },

    #[error("diagonal block {block} is singular")]
    SingularBlock { block: usize },

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("block {block} mixes red and black points")]
    InconsistentBlockColoring { block: usize },

    #[error("invalid norm specification: {0}")]
    InvalidNormSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported Matrix Market field or format: {0}")]
    UnsupportedField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// `cond_2(V_r)` above the warning threshold.
    IllConditionedEigenbasis { cond: f64 },
    /// The requested coarse dimension cut a conjugate pair; it was grown by one.
    PairSplit { requested: usize, effective: usize },
    /// A real eigenvalue's eigenvector carried a noticeable imaginary part that was dropped.
    TruncatedImaginary { column: usize, residue: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::IllConditionedEigenbasis { cond } => {
                write!(f, "ill-conditioned eigenbasis (cond {cond:.3e})")
            }
            Warning::PairSplit {
                requested,
                effective,
            } => write!(f, "n_c {requested} splits a conjugate pair; using {effective}"),
            Warning::TruncatedImaginary { column, residue } => {
                write!(f, "column {column} imaginary residue {residue:.3e} truncated")
            }
        }
    }
}
