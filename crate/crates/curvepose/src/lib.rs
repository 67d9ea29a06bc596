//! Files and drivers around `curvepose-core`: PNG/JSON datasets, target
//! folders, model files, training and evaluation runs, pose reports and
//! overlays. The `curvepose` binary is a thin clap front end over these.

pub mod dataset;
pub mod evaluate;
pub mod images;
pub mod model;
pub mod overlay;
pub mod report;
pub mod targets;
pub mod training;

use std::path::{Path, PathBuf};

use thiserror::Error;

/// A failure tied to one file on disk.
#[derive(Debug, Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Model { path: PathBuf, source: curvepose_core::curvnet::CurvNetError },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

impl FileError {
    pub fn path(&self) -> &Path {
        match self {
            FileError::Io { path, .. }
            | FileError::Image { path, .. }
            | FileError::Json { path, .. }
            | FileError::Model { path, .. }
            | FileError::Invalid { path, .. } => path,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        FileError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn invalid(path: &Path, message: impl Into<String>) -> Self {
        FileError::Invalid { path: path.to_path_buf(), message: message.into() }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let text = std::fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| FileError::Json { path: path.to_path_buf(), source })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| FileError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| FileError::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<(), FileError> {
    std::fs::create_dir_all(path).map_err(|e| FileError::io(path, e))
}
