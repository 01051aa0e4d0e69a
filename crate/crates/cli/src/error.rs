use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error in {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: wentropy::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialize(String),
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures and output errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }

    /// Classifies a core error raised while evaluating `context`.
    pub fn from_core(context: impl Into<String>, err: wentropy::Error) -> Self {
        use wentropy::Error as E;
        match err {
            E::Config(_) | E::Input(_) | E::UnknownCheck(_) | E::Shape { .. } => CliError::Config(format!("{}: {err}", context.into())),
            other => CliError::Numerical { context: context.into(), source: other },
        }
    }
}
