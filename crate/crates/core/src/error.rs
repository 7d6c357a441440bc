use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic {found:02x?} at byte 0, expected \"RGF1\"")]
    BadMagic { path: PathBuf, found: [u8; 4] },

    #[error("{path}: unsupported RGF1 version {version} at byte 4")]
    BadVersion { path: PathBuf, version: u32 },

    #[error("{path}: header too short ({actual} bytes, need 20)")]
    ShortHeader { path: PathBuf, actual: usize },

    #[error("{path}: truncated payload: expected {expected} bytes after the 20-byte header, found {actual}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("{context}: non-finite value at {location}")]
    NonFinite { context: String, location: String },

    #[error("{context}: empty track (T={t}, D={d})")]
    EmptyTrack { context: String, t: usize, d: usize },

    #[error("invalid fps {0}")]
    BadFps(f32),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("json {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("label: {0}")]
    Label(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("synthetic placement infeasible: {0}")]
    Placement(String),

    #[error("augmentation: {0}")]
    Augment(String),

    #[error("training data: {0}")]
    Training(String),

    #[error("evaluation: {0}")]
    Eval(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
