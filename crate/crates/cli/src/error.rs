use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Model(#[from] springcool::Error),

    /// A computed quantity is NaN or infinite; nothing is written.
    #[error("non-finite value in output: {0}")]
    NonFinite(String),

    /// Verification ran but the agreement is worse than the threshold.
    #[error("verification failed: {0}")]
    Disagreement(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// 2 config, 3 instability or infeasibility, 4 convergence or numerical
    /// failure, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        use springcool::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Model(E::Config { .. } | E::Domain { .. } | E::SignalBlind(_)) => 2,
            CliError::Model(E::Unstable { .. } | E::Infeasible(_)) => 3,
            CliError::Model(E::Convergence { .. }) => 4,
            CliError::NonFinite(_) | CliError::Disagreement(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
