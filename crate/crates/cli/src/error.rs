use std::fmt;

/// Errors of the harness. Schema errors carry the scenario line (1-based)
/// and the dotted field path they refer to.
#[derive(Debug)]
pub enum CliError {
    Schema { line: Option<usize>, field: String, message: String },
    Task { context: String, source: matweight::Error },
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema { line: Some(l), field, message } => write!(f, "schema error at line {l}, field `{field}`: {message}"),
            CliError::Schema { line: None, field, message } => write!(f, "schema error, field `{field}`: {message}"),
            CliError::Task { context, source } => write!(f, "{context}: {source}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Task { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl CliError {
    pub fn schema(line: Option<usize>, field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema { line, field: field.into(), message: message.into() }
    }
}

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for matweight::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Task { context: what(), source })
    }
}

/// Variant name of a core error, e.g. `NotPsd`.
pub fn error_kind(e: &matweight::Error) -> String {
    let debug = format!("{e:?}");
    debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}
