use thiserror::Error;

/// Failures specific to the command line layer. Engine errors pass through
/// unchanged.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("unknown table {0:?}")]
    UnknownTable(String),
    #[error("table {0:?} already exists (use --replace to overwrite it)")]
    TableExists(String),
    #[error("{0}")]
    Usage(String),
}

pub fn parse_error(line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        message: message.into(),
    }
}
