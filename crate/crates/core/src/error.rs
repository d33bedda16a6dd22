// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the segmentation, encoding and classification stages.
///
/// Row and column indices carried by the CSV variants are 1-based file coordinates.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,
    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    Format { row: usize, expected: usize, found: usize },
    #[error("cannot parse cell at row {row}, column {col}: {text:?}")]
    Parse { row: usize, col: usize, text: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid cohort spec: {0}")]
    Spec(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("bit code of length {len} cannot be split into 6-bit groups")]
    Grouping { len: usize },
    #[error("cannot build fold plan: class {class} has {count} samples but k = {k}")]
    Plan { class: usize, count: usize, k: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Wraps the error with a short description of the stage that failed.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self.root(), Error::Numerical(_))
    }
}
