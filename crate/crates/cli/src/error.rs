use std::path::{Path, PathBuf};

use thiserror::Error;

/// Exit status for usage and schema problems.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for numerical failures.
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Lib(#[from] wpfair::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use wpfair::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) if e.is_solver_failure() => EXIT_SOLVER,
            CliError::Lib(
                E::SchemaMismatch(_)
                | E::Parse { .. }
                | E::DegenerateSplit(_)
                | E::TransformDomain { .. }
                | E::InvalidConfig(_)
                | E::InvalidCost(_)
                | E::EtaOutOfRange(_)
                | E::DimensionMismatch { .. }
                | E::EmptyGroup { .. }
                | E::TooFewRows(_)
                | E::Csv(_),
            ) => EXIT_USAGE,
            _ => 1,
        }
    }
}
