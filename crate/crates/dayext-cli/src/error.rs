//! Errors surfaced by the command line tool: syntax errors with positions,
//! semantic errors naming the culprit, and failures forwarded from the
//! underlying calculus.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("error in {kind} `{name}`: {message}")]
    Semantic {
        kind: &'static str,
        name: String,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Calculus(#[from] dayext::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn semantic(kind: &'static str, name: &str, message: impl Into<String>) -> CliError {
        CliError::Semantic {
            kind,
            name: name.to_string(),
            message: message.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
