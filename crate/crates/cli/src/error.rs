use std::path::{Path, PathBuf};

use sipo_core::SipoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key {0}")]
    UnknownKey(String),
    #[error("config key {0} is required")]
    MissingKey(String),
    #[error("config key {key}: invalid value {value:?}")]
    InvalidValue { key: String, value: String },
    #[error("config key {key}: {msg}")]
    Conflict { key: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: unsupported format")]
    UnsupportedFormat(PathBuf),
    #[error("{path}: corrupt header: {msg}")]
    CorruptHeader { path: PathBuf, msg: String },
    #[error("{path}: sidecar shape {shape:?} needs {expected} values, file holds {actual}")]
    ShapeMismatchWithSidecar {
        path: PathBuf,
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Core(#[from] SipoError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn header(path: &Path, msg: impl Into<String>) -> Self {
        Self::CorruptHeader {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
