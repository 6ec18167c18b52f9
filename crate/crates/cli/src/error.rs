use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    /// Bad configuration, reported with the offending key path.
    #[error("invalid configuration: {0}")]
    Validation(String),

    /// A check the subcommand asserts did not hold.
    #[error("assertion failed: {message}")]
    Assertion { message: String, report: String },

    #[error(transparent)]
    Core(#[from] fshe::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use fshe::Error as E;
        match self {
            Self::Usage(_) => 2,
            Self::Validation(_) => 3,
            Self::Core(E::Config(_) | E::Domain(_) | E::Hypothesis(_) | E::NoRoot(_) | E::TooFewReplicas { .. } | E::Shape(_)) => 3,
            _ => 1,
        }
    }
}
