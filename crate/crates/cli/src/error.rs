use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] polaron::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use polaron::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Json(_) => 1,
            CliError::Numerical(e) => match e {
                E::InvalidConfig(_) | E::Domain(_) | E::Parse(_) | E::DimensionCap { .. } | E::GridMismatch(_) | E::InvalidGrid(_) | E::Io(_) => 1,
                _ => 2,
            },
        }
    }
}
