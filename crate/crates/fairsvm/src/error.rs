//! Error type shared across the crate.
//!
//! Variants split along the exit-status boundary the CLI needs: user-input
//! problems (bad files, degenerate data, malformed flags) versus runtime
//! failures (solver breakdown, I/O during output). `exit_status` encodes
//! that mapping in one place.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input data or arguments are structurally invalid.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A group (z = +1 or z = -1) is empty or too small for the requested
    /// operation.
    #[error("degenerate group: {0}")]
    DegenerateGroup(String),

    /// A label class (y = +1 or y = -1) is empty where both are required.
    #[error("degenerate label: {0}")]
    DegenerateLabel(String),

    /// A dataset or recipe file could not be read or parsed.
    #[error("load error: {0}")]
    Load(String),

    /// The convex solver failed to produce a usable iterate.
    #[error("solver error: {0}")]
    Solver(String),

    /// Training-level failure wrapping a solver or numeric breakdown.
    #[error("training failed at iteration {iteration}: {message}")]
    Training { iteration: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the CLI: 2 for caller mistakes, 1 for
    /// runtime failures.
    pub fn exit_status(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::DegenerateGroup(_)
            | Error::DegenerateLabel(_)
            | Error::Load(_) => 2,
            Error::Solver(_) | Error::Training { .. } | Error::Io(_) | Error::Serde(_) => 1,
        }
    }
}
