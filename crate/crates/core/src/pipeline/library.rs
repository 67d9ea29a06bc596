use alloc::vec::Vec;

use super::PipelineError;
use crate::features::{detect_and_describe, Features, SiftParams};
use crate::synth::TargetImage;

/// A flat target with its keypoints and descriptors (texture pixels).
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryEntry {
    pub target: TargetImage,
    pub features: Features,
}

/// The set of known targets, indexed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetLibrary {
    entries: Vec<LibraryEntry>,
}

impl TargetLibrary {
    /// Describe every target once. Ids must be exactly `0..n` (any order).
    pub fn build(mut targets: Vec<TargetImage>, params: &SiftParams) -> Result<Self, PipelineError> {
        if targets.is_empty() {
            return Err(PipelineError::EmptyLibrary);
        }
        targets.sort_by_key(|t| t.id);
        for (i, t) in targets.iter().enumerate() {
            if t.id != i {
                return Err(PipelineError::TargetIds(t.id));
            }
        }
        let mut entries = Vec::with_capacity(targets.len());
        for target in targets {
            let features = detect_and_describe(&target.pixels.to_gray(), params)?;
            entries.push(LibraryEntry { target, features });
        }
        Ok(TargetLibrary { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: usize) -> Result<&LibraryEntry, PipelineError> {
        self.entries.get(id).ok_or(PipelineError::UnknownTarget(id))
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn targets(&self) -> Vec<TargetImage> {
        self.entries.iter().map(|e| e.target.clone()).collect()
    }
}
