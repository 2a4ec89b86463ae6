//! On-disk formats: MDP JSON, DRA JSON, the ltl2dstar v2 explicit format,
//! policy/result JSON and simulation reports.

use serde::de::DeserializeOwned;

pub mod dra;
pub mod ltl2dstar;
pub mod mdp;
pub mod policy;
pub mod report;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    /// Syntax or schema error at a 1-based position.
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    /// Well-formed input describing an invalid model.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] cyclesynth_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FormatError {
    pub fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        FormatError::Parse { line, column, message: message.into() }
    }

    /// `(line, column)` for positioned errors.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            FormatError::Parse { line, column, .. } => Some((*line, *column)),
            _ => None,
        }
    }
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        // serde_json appends " at line L column C" to its own message
        let text = e.to_string();
        let message = match text.rfind(" at line ") {
            Some(i) => text[..i].to_string(),
            None => text,
        };
        FormatError::Parse { line: e.line(), column: e.column(), message }
    }
}

pub(crate) fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, FormatError> {
    Ok(serde_json::from_str(text)?)
}

pub(crate) fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}
