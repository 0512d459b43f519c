use std::fmt;
use std::path::Path;

use cam::CamError;

/// CLI failure with its exit code class.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<CamError> for CliError {
    fn from(e: CamError) -> Self {
        match e {
            CamError::DimensionMismatch(_)
            | CamError::InvalidArgument(_)
            | CamError::Parse(_)
            | CamError::NonPositiveRowSum { .. }
            | CamError::TooFewPoints { .. }
            | CamError::FoldTooSmall { .. }
            | CamError::NotPsd(_) => CliError::Validation(e.to_string()),
            CamError::NnlsNonConvergence(_)
            | CamError::DegenerateSector
            | CamError::InsufficientEdges { .. }
            | CamError::RankDeficient { .. }
            | CamError::InfiniteSnr
            | CamError::RejectionExhausted(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
