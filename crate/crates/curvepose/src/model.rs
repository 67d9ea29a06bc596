use std::fmt::Write as _;
use std::path::Path;

use curvepose_core::curvnet::{decode_model, encode_model, CurvNet, TrainHistory};

use crate::FileError;

pub fn save_model(net: &CurvNet, path: &Path) -> Result<(), FileError> {
    std::fs::write(path, encode_model(net)).map_err(|e| FileError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<CurvNet, FileError> {
    let bytes = std::fs::read(path).map_err(|e| FileError::io(path, e))?;
    decode_model(&bytes).map_err(|source| FileError::Model { path: path.to_path_buf(), source })
}

pub const HISTORY_HEADER: &str = "epoch,train_huber,val_huber,train_mse,val_mse";

pub fn history_csv(history: &TrainHistory) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for e in &history.epochs {
        let _ = writeln!(out, "{},{},{},{},{}", e.epoch, e.train_huber, e.val_huber, e.train_mse, e.val_mse);
    }
    out
}

pub fn write_history(history: &TrainHistory, path: &Path) -> Result<(), FileError> {
    std::fs::write(path, history_csv(history)).map_err(|e| FileError::io(path, e))
}
