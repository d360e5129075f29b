use std::path::PathBuf;

/// Failure of a command, carrying the process exit status it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    /// A malformed or mismatched input file.
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: ghostshield::Error },

    #[error(transparent)]
    Core(#[from] ghostshield::Error),
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use ghostshield::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Input { .. } => EXIT_IO,
            CliError::Core(e) => match e {
                E::Io(_) | E::Format(_) | E::ShapeMismatch { .. } => EXIT_IO,
                E::DegenerateChannel | E::DegenerateRegion(_) | E::UndefinedThreshold => EXIT_DEGENERATE,
                E::InfeasibleLevel { .. } => EXIT_INFEASIBLE,
                E::InvalidArgument(_) | E::InvalidState(_) | E::NotPositive { .. } | E::CorruptedState { .. } => {
                    EXIT_USAGE
                }
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
