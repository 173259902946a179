use thiserror::Error;

/// Failures that end a run before any report is produced.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at '{pointer}': {message}")]
    Schema { pointer: String, message: String },

    #[error("numeric invariant violated: {message}")]
    Numeric { name: String, message: String },

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] jbwcond::Error),
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_NONEXISTENT: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::Io(_) => EXIT_SCHEMA,
            CliError::Core(jbwcond::Error::UnknownCase(_)) => EXIT_SCHEMA,
            CliError::Numeric { .. } | CliError::Core(_) => EXIT_NUMERIC,
        }
    }
}
