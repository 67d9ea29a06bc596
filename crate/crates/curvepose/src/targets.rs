use std::path::{Path, PathBuf};

use curvepose_core::raster::RgbImage;
use curvepose_core::synth::{procedural_target, TargetImage};

use crate::images::{list_images, load_rgb, save_png};
use crate::FileError;

/// Every image in `dir`, in file-name order; the n-th file becomes target n.
pub fn load_targets(dir: &Path) -> Result<Vec<TargetImage>, FileError> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(FileError::invalid(dir, "no target images (png/jpg) found"));
    }
    paths.iter().enumerate().map(|(id, p)| Ok(TargetImage::new(id, load_rgb(p)?))).collect()
}

/// Equirectangular backgrounds, in file-name order.
pub fn load_panoramas(dir: &Path) -> Result<Vec<RgbImage>, FileError> {
    list_images(dir)?.iter().map(|p| load_rgb(p)).collect()
}

/// Write `count` procedural labels as `target_NN.png`, `height` pixels tall.
pub fn write_procedural_targets(dir: &Path, count: usize, seed: u64, height: u32) -> Result<Vec<PathBuf>, FileError> {
    crate::create_dir(dir)?;
    (0..count)
        .map(|id| {
            let path = dir.join(format!("target_{id:02}.png"));
            save_png(&procedural_target(id, seed, height).pixels, &path)?;
            Ok(path)
        })
        .collect()
}
