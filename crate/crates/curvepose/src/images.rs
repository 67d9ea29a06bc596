use std::path::Path;

use curvepose_core::raster::RgbImage;

use crate::FileError;

/// Decode any PNG or JPEG into an 8-bit RGB raster.
pub fn load_rgb(path: &Path) -> Result<RgbImage, FileError> {
    let img = image::open(path).map_err(|source| FileError::Image { path: path.to_path_buf(), source })?;
    let rgb = img.into_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(RgbImage { width: w, height: h, data: rgb.into_raw() })
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<(), FileError> {
    let buf = image::RgbImage::from_raw(img.width, img.height, img.data.clone())
        .ok_or_else(|| FileError::invalid(path, "pixel buffer does not match image size"))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| FileError::Image { path: path.to_path_buf(), source })
}

/// Image files in `dir` with a PNG or JPEG extension, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<std::path::PathBuf>, FileError> {
    let entries = std::fs::read_dir(dir).map_err(|e| FileError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| FileError::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}
