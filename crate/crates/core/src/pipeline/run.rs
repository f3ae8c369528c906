use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::overlay::render_overlay;
use super::records::{
    record_path, write_json, DetectionCount, FrameRecord, Manifest, ManifestFrame, MANIFEST_FILE,
};
use crate::acontrario::{detect, Detection};
use crate::error::{Error, Result, StageExt};
use crate::geometry::{
    boxes_from_detections, detect_interest_points, fuse_overlapping, keypoint_refine, BoundingBox,
    KeypointParams,
};
use crate::imaging::{build_pyramid, load_frame, save_png, ImageBuffer};
use crate::sparse::{
    denoise, denoise_with_dictionary, residual, DenoiseParams, Dictionary, Residual,
};

const FRAME_EXTENSIONS: [&str; 4] = ["png", "pgm", "ppm", "pnm"];

/// Output of one frame. Boxes are in (y, x, w, h) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub frame: String,
    pub boxes: Vec<BoundingBox>,
    pub counts: Vec<DetectionCount>,
    pub timing_ms: BTreeMap<String, f64>,
}

impl FrameResult {
    pub fn record(&self) -> FrameRecord {
        FrameRecord {
            frame: self.frame.clone(),
            boxes: self.boxes.clone(),
            counts: self.counts.clone(),
        }
    }
}

/// Stable 64-bit seed for a frame: FNV-1a over the frame id, mixed with the run seed.
pub fn frame_seed(seed: u64, frame: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in frame.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix(seed ^ h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn level_params(base: &DenoiseParams, level: usize) -> DenoiseParams {
    DenoiseParams {
        rng_seed: splitmix(base.rng_seed.wrapping_add(level as u64)),
        ..base.clone()
    }
}

/// Per-frame pipeline with an optional dictionary cache for `reuse_dict > 1`.
///
/// With `reuse_dict == 1` every frame learns its own dictionaries and frames
/// are fully independent.
#[derive(Debug)]
pub struct FramePipeline {
    cfg: PipelineConfig,
    cache: Option<Vec<Dictionary>>,
    frames_on_cache: usize,
}

impl FramePipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate().stage("config")?;
        Ok(Self {
            cfg,
            cache: None,
            frames_on_cache: 0,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Runs one frame; `seed` replaces the configured dictionary seed.
    pub fn run(&mut self, frame: &str, img: &ImageBuffer, seed: u64) -> Result<FrameResult> {
        let cfg = &self.cfg;
        let mut timing = BTreeMap::new();
        let mut clock = Instant::now();
        let mut lap = |name: &str, timing: &mut BTreeMap<String, f64>| {
            timing.insert(name.to_string(), clock.elapsed().as_secs_f64() * 1e3);
            clock = Instant::now();
        };

        let pyramid = build_pyramid(img, cfg.n_scales, cfg.denoise.patch_side).stage("pyramid")?;
        lap("pyramid", &mut timing);

        let base = DenoiseParams {
            rng_seed: seed,
            ..cfg.denoise.clone()
        };
        let reuse = match &self.cache {
            Some(d) if self.frames_on_cache < cfg.reuse_dict && d.len() == pyramid.len() => {
                Some(d.clone())
            }
            _ => None,
        };
        let denoised = pyramid
            .levels()
            .par_iter()
            .enumerate()
            .map(|(s, level)| {
                let p = level_params(&base, s);
                match &reuse {
                    Some(dicts)
                        if dicts[s].dim() == p.patch_side * p.patch_side * level.channels() =>
                    {
                        denoise_with_dictionary(level, &p, &dicts[s])
                    }
                    _ => denoise(level, &p),
                }
            })
            .collect::<Result<Vec<_>>>()
            .stage("denoise")?;
        if reuse.is_some() {
            self.frames_on_cache += 1;
        } else if cfg.reuse_dict > 1 {
            self.cache = Some(denoised.iter().map(|d| d.dictionary.clone()).collect());
            self.frames_on_cache = 1;
        }
        let residuals = pyramid
            .levels()
            .iter()
            .zip(&denoised)
            .map(|(level, d)| residual(level, &d.reconstruction))
            .collect::<Result<Vec<Residual>>>()
            .stage("residual")?;
        lap("denoise", &mut timing);

        let dets = detect(&residuals, &cfg.radii, cfg.log_eps).stage("detect")?;
        lap("detect", &mut timing);

        let (w, h) = (img.width(), img.height());
        let mut boxes = fuse_overlapping(&boxes_from_detections(&dets, w, h), w, h);
        lap("boxes", &mut timing);

        if cfg.refine_keypoints && !boxes.is_empty() {
            let params = KeypointParams {
                per_detector: cfg.per_detector,
                ..KeypointParams::default()
            };
            let points = detect_interest_points(img, &params);
            boxes = keypoint_refine(&boxes, &points);
            lap("refine", &mut timing);
        }
        boxes.sort_by(BoundingBox::canonical_cmp);

        Ok(FrameResult {
            frame: frame.to_string(),
            boxes,
            counts: count_detections(&dets),
            timing_ms: timing,
        })
    }
}

fn count_detections(dets: &[Detection]) -> Vec<DetectionCount> {
    let mut map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for d in dets {
        *map.entry((d.scale, d.radius)).or_default() += 1;
    }
    map.into_iter()
        .map(|((scale, radius), count)| DetectionCount {
            scale,
            radius,
            count,
        })
        .collect()
}

/// Single-frame pipeline: pyramid, per-level denoising and residual,
/// a-contrario detection, box mapping, fusion and optional keypoint refinement.
pub fn run_frame(img: &ImageBuffer, cfg: &PipelineConfig) -> Result<FrameResult> {
    FramePipeline::new(cfg.clone())?.run("", img, cfg.denoise.rng_seed)
}

#[derive(Debug, Clone, Default)]
pub struct SequenceOptions {
    /// Also write `<frame>_overlay.png` next to each record.
    pub overlay: bool,
}

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut frames: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    frames.sort();
    if frames.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no frames (png/pgm/ppm/pnm) in {}",
            dir.display()
        )));
    }
    Ok(frames)
}

fn frame_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Processes every frame of `input` in lexicographic order.
///
/// Writes `<frame>.json` per frame and a manifest to `output`. The input
/// listing and a provisional manifest are written before any frame is
/// processed, so an empty input or unwritable output fails immediately.
/// Each frame's seed is [`frame_seed`] of the configured seed and its id.
pub fn run_sequence(
    input: &Path,
    cfg: &PipelineConfig,
    output: &Path,
    opts: &SequenceOptions,
) -> Result<Vec<FrameResult>> {
    let frames = list_frames(input).stage("input")?;
    std::fs::create_dir_all(output)
        .map_err(|source| Error::Io {
            path: output.to_path_buf(),
            source,
        })
        .stage("output")?;
    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.denoise.rng_seed,
        config: cfg.clone(),
        frames: Vec::new(),
    };
    let manifest_path = output.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest).stage("output")?;

    let mut pipeline = FramePipeline::new(cfg.clone())?;
    let mut results = Vec::with_capacity(frames.len());
    for path in &frames {
        let id = frame_id(path);
        log::info!("frame {id}");
        let img = load_frame(path).stage("load")?;
        let res = pipeline.run(&id, &img, frame_seed(cfg.denoise.rng_seed, &id))?;
        write_json(&record_path(output, &id), &res.record()).stage("output")?;
        if opts.overlay {
            let over = render_overlay(&img, &res.boxes, None);
            save_png(&over, output.join(format!("{id}_overlay.png"))).stage("overlay")?;
        }
        manifest.frames.push(ManifestFrame {
            frame: id,
            source: path.display().to_string(),
            timing_ms: res.timing_ms.clone(),
        });
        results.push(res);
    }
    write_json(&manifest_path, &manifest).stage("output")?;
    Ok(results)
}
