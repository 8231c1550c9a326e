use std::fmt;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Exit 1.
    Config(String),
    /// Exit 2: a code or SEED condition is violated.
    Verification(String),
    /// Exit 3.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<jumpcode::Error> for CliError {
    fn from(e: jumpcode::Error) -> Self {
        match e {
            jumpcode::Error::Domain(m) => CliError::Config(m),
            jumpcode::Error::Condition(m) => CliError::Verification(m),
            jumpcode::Error::Numeric(m) => CliError::Numeric(m),
        }
    }
}
