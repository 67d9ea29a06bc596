//! On-disk dataset: `images/NNNNN.png`, one `truth/NNNNN.json` sidecar per
//! image and a `manifest.json` fixing the order.

use std::path::{Path, PathBuf};

use curvepose_core::geometry::CameraIntrinsics;
use curvepose_core::raster::{BBox, RgbImage};
use curvepose_core::synth::{GroundTruth, SceneSample};
use serde::{Deserialize, Serialize};

use crate::images::{load_rgb, save_png};
use crate::{create_dir, read_json, write_json, FileError};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsJson {
    pub fx: f64,
    pub fy: f64,
    pub s: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl From<CameraIntrinsics> for IntrinsicsJson {
    fn from(k: CameraIntrinsics) -> Self {
        IntrinsicsJson { fx: k.fx, fy: k.fy, s: k.s, cx: k.cx, cy: k.cy, width: k.width, height: k.height }
    }
}

impl IntrinsicsJson {
    pub fn to_intrinsics(self) -> Result<CameraIntrinsics, curvepose_core::geometry::GeometryError> {
        CameraIntrinsics::new(self.fx, self.fy, self.s, self.cx, self.cy, self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BBoxJson {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<BBox> for BBoxJson {
    fn from(b: BBox) -> Self {
        BBoxJson { x: b.x, y: b.y, w: b.w, h: b.h }
    }
}

impl From<BBoxJson> for BBox {
    fn from(b: BBoxJson) -> Self {
        BBox::new(b.x, b.y, b.w, b.h)
    }
}

/// Ground-truth sidecar schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthJson {
    pub schema_version: u32,
    pub target_id: usize,
    pub relative_position: [f64; 3],
    pub relative_rotation_euler: [f64; 3],
    pub diameter: f64,
    pub label_width: f64,
    pub label_height: f64,
    pub intrinsics: IntrinsicsJson,
    pub bbox: BBoxJson,
}

impl From<&GroundTruth> for TruthJson {
    fn from(t: &GroundTruth) -> Self {
        TruthJson {
            schema_version: SCHEMA_VERSION,
            target_id: t.target_id,
            relative_position: t.relative_position,
            relative_rotation_euler: t.relative_rotation_euler,
            diameter: t.diameter,
            label_width: t.label_width,
            label_height: t.label_height,
            intrinsics: t.intrinsics.into(),
            bbox: t.bbox.into(),
        }
    }
}

impl TruthJson {
    fn into_truth(self, path: &Path) -> Result<GroundTruth, FileError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(FileError::invalid(
                path,
                format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let intrinsics = self.intrinsics.to_intrinsics().map_err(|e| FileError::invalid(path, e.to_string()))?;
        let finite = self
            .relative_position
            .iter()
            .chain(&self.relative_rotation_euler)
            .chain(&[
                self.diameter,
                self.label_width,
                self.label_height,
                self.bbox.x,
                self.bbox.y,
                self.bbox.w,
                self.bbox.h,
            ])
            .all(|v| v.is_finite());
        if !finite {
            return Err(FileError::invalid(path, "non-finite value"));
        }
        Ok(GroundTruth {
            target_id: self.target_id,
            relative_position: self.relative_position,
            relative_rotation_euler: self.relative_rotation_euler,
            diameter: self.diameter,
            label_width: self.label_width,
            label_height: self.label_height,
            intrinsics,
            bbox: self.bbox.into(),
        })
    }
}

pub fn read_truth(path: &Path) -> Result<GroundTruth, FileError> {
    read_json::<TruthJson>(path)?.into_truth(path)
}

pub fn write_truth(truth: &GroundTruth, path: &Path) -> Result<(), FileError> {
    write_json(path, &TruthJson::from(truth))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Relative to the dataset root.
    pub image: String,
    pub truth: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub samples: Vec<ManifestEntry>,
}

/// Streams samples to disk; the manifest is written by [`finish`](Self::finish).
#[derive(Debug)]
pub struct DatasetWriter {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl DatasetWriter {
    pub fn create(root: &Path) -> Result<Self, FileError> {
        create_dir(&root.join("images"))?;
        create_dir(&root.join("truth"))?;
        Ok(DatasetWriter { root: root.to_path_buf(), entries: Vec::new() })
    }

    pub fn push(&mut self, sample: &SceneSample) -> Result<(), FileError> {
        let n = self.entries.len();
        let entry = ManifestEntry { image: format!("images/{n:05}.png"), truth: format!("truth/{n:05}.json") };
        save_png(&sample.image, &self.root.join(&entry.image))?;
        write_truth(&sample.truth, &self.root.join(&entry.truth))?;
        self.entries.push(entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn finish(self) -> Result<PathBuf, FileError> {
        let path = self.root.join(MANIFEST);
        write_json(&path, &Manifest { schema_version: SCHEMA_VERSION, samples: self.entries })?;
        Ok(path)
    }
}

pub fn write_dataset(samples: &[SceneSample], root: &Path) -> Result<(), FileError> {
    let mut w = DatasetWriter::create(root)?;
    for s in samples {
        w.push(s)?;
    }
    w.finish().map(|_| ())
}

/// A dataset opened through its manifest; samples load on demand.
#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
    manifest: Manifest,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self, FileError> {
        let path = root.join(MANIFEST);
        let manifest: Manifest = read_json(&path)?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(FileError::invalid(
                &path,
                format!("schema_version {} is not supported", manifest.schema_version),
            ));
        }
        Ok(Dataset { root: root.to_path_buf(), manifest })
    }

    pub fn len(&self) -> usize {
        self.manifest.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.samples.is_empty()
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.manifest.samples
    }

    pub fn truth(&self, index: usize) -> Result<GroundTruth, FileError> {
        read_truth(&self.root.join(&self.manifest.samples[index].truth))
    }

    pub fn image(&self, index: usize) -> Result<RgbImage, FileError> {
        load_rgb(&self.root.join(&self.manifest.samples[index].image))
    }

    /// Image and truth; the image size must match the recorded intrinsics.
    pub fn sample(&self, index: usize) -> Result<SceneSample, FileError> {
        let truth = self.truth(index)?;
        let image = self.image(index)?;
        if (image.width, image.height) != (truth.intrinsics.width, truth.intrinsics.height) {
            let path = self.root.join(&self.manifest.samples[index].image);
            return Err(FileError::invalid(
                &path,
                format!(
                    "image is {}x{} but its truth says {}x{}",
                    image.width, image.height, truth.intrinsics.width, truth.intrinsics.height
                ),
            ));
        }
        Ok(SceneSample { image, truth })
    }
}

pub fn read_dataset(root: &Path) -> Result<Vec<SceneSample>, FileError> {
    let ds = Dataset::open(root)?;
    (0..ds.len()).map(|i| ds.sample(i)).collect()
}

/// A box from either a bare `{x, y, w, h}` object or any JSON object with a
/// `bbox` field (such as a truth sidecar).
pub fn read_bbox(path: &Path) -> Result<BBox, FileError> {
    let value: serde_json::Value = read_json(path)?;
    let inner = value.get("bbox").cloned().unwrap_or(value);
    let b: BBoxJson =
        serde_json::from_value(inner).map_err(|source| FileError::Json { path: path.to_path_buf(), source })?;
    Ok(b.into())
}

/// Intrinsics from either a bare intrinsics object or an object with an
/// `intrinsics` field.
pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics, FileError> {
    let value: serde_json::Value = read_json(path)?;
    let inner = value.get("intrinsics").cloned().unwrap_or(value);
    let k: IntrinsicsJson =
        serde_json::from_value(inner).map_err(|source| FileError::Json { path: path.to_path_buf(), source })?;
    k.to_intrinsics().map_err(|e| FileError::invalid(path, e.to_string()))
}
