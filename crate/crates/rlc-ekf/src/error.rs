//! Crate-wide error type.
//!
//! Variants are grouped by how the command-line tool reports them:
//! configuration problems exit with code 1, data problems with code 2, and
//! numerical failures with code 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: non-PSD covariance, bad scenario knobs, empty
    /// validation set and the like.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data (datasets, policy files).
    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Innovation covariance is numerically singular; the caller may skip the
    /// correction for this frame.
    #[error("innovation covariance is numerically singular (condition number {condition:.3e})")]
    SingularInnovation { condition: f64 },

    /// The filter state degenerated beyond recovery.
    #[error("filter divergence: {0}")]
    FilterDivergence(String),

    /// Training produced a non-finite loss; the snapshot pins down where.
    #[error(
        "non-finite loss (seed {seed}, phase {phase}, step {step}): {detail}"
    )]
    NonFiniteLoss {
        seed: u64,
        phase: usize,
        step: usize,
        detail: String,
    },
}

impl Error {
    /// Process exit code for the CLI: 1 configuration, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::Io(_) => 2,
            Error::SingularInnovation { .. }
            | Error::FilterDivergence(_)
            | Error::NonFiniteLoss { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
