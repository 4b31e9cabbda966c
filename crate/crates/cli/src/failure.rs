use std::fmt;

use spectl_core::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn config(e: impl Into<anyhow::Error>) -> Self {
        Failure::Config(e.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e:#}"),
        }
    }
}

/// Input problems count as configuration errors; breakdowns of the
/// factorizations count as numerical failures.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch(_)
            | Error::BadCoarseDim { .. }
            | Error::NotRealPencil
            | Error::InvalidPartition(_)
            | Error::InconsistentBlockColoring { .. }
            | Error::InvalidNormSpec(_)
            | Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::UnsupportedField(_)
            | Error::Io(_) => Failure::Config(e.into()),
            _ => Failure::Numerical(e.into()),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;
