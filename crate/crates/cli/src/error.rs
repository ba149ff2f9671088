use ptflab::PtfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Infeasible(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Analysis(#[from] PtfError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Csv(_) | CliError::Io(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Analysis(e) => match e {
                PtfError::CapExceeded { .. } | PtfError::Infeasible(_) => 3,
                _ => 2,
            },
        }
    }
}
