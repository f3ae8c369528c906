use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Number of significant pixels found at one (scale, radius).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionCount {
    pub scale: usize,
    pub radius: usize,
    pub count: usize,
}

/// The per-frame JSON document written by `detect`.
///
/// Holds only deterministic content so reruns with the same seed are
/// byte-identical; stage timings go to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: String,
    pub boxes: Vec<BoundingBox>,
    #[serde(default)]
    pub counts: Vec<DetectionCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub frame: String,
    pub source: String,
    pub timing_ms: BTreeMap<String, f64>,
}

/// Run description written next to the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub frames: Vec<ManifestFrame>,
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn record_path(dir: &Path, frame: &str) -> PathBuf {
    dir.join(format!("{frame}.json"))
}

/// Reads every frame record in `dir` (all `*.json` except the manifest), by file name.
pub fn read_records(dir: &Path) -> Result<Vec<FrameRecord>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "json")
                && p.file_name().is_some_and(|n| n != MANIFEST_FILE)
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Format {
                path: p.clone(),
                message: e.to_string(),
            })
        })
        .collect()
}
