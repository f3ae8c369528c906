use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::budget::TestBudget;
use super::ggd::{fit_ggd, gaussianize};
use super::tail::log_nfa;
use crate::error::{Error, Result};
use crate::imaging::{convolve_disk, mirror_gain, DiskKernel, Plane};
use crate::sparse::Residual;

/// Residual planes with a root-mean-square below this many grey levels count
/// as perfectly reconstructed. It sits far below the 8-bit quantization noise
/// (1/√12 ≈ 0.29), so only floating-point round-off falls under it; the fit and
/// the standardization are scale-free and would otherwise amplify round-off.
pub const MIN_RESIDUAL_RMS: f64 = 1e-3;

/// One pixel whose filtered residual is significant at the frame's NFA level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub scale: usize,
    pub channel: usize,
    pub radius: usize,
    pub x: usize,
    pub y: usize,
    pub log_nfa: f64,
}

impl Detection {
    fn sort_key(&self) -> (usize, usize, usize, usize, usize) {
        (self.scale, self.channel, self.radius, self.y, self.x)
    }
}

/// `(plane − mean) / std` with population statistics.
pub fn standardize_filtered(plane: &Plane) -> Result<Plane> {
    let n = plane.len() as f64;
    let mean = plane.data().iter().sum::<f64>() / n;
    let var = plane
        .data()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::ZeroVariance);
    }
    let sd = var.sqrt();
    Ok(plane.map(|v| (v - mean) / sd))
}

/// Tests every pixel of an already Gaussianized plane at each radius.
///
/// Filtered values are border-equalized with [`mirror_gain`] before the
/// empirical standardization, so pixels near the border are not favoured.
///
/// Radii whose kernel does not fit the plane, and filtered planes with no
/// variance, contribute nothing.
pub fn detect_in_plane(
    field: &Plane,
    scale: usize,
    channel: usize,
    kernels: &[DiskKernel],
    n_tests: u64,
    log_eps: f64,
) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for kernel in kernels {
        let mut filtered = match convolve_disk(field, kernel) {
            Ok(p) => p,
            Err(Error::PlaneTooSmall { .. }) => continue,
            Err(e) => return Err(e),
        };
        let gain = mirror_gain(field.width(), field.height(), kernel);
        for (f, g) in filtered.data_mut().iter_mut().zip(gain.data()) {
            *f *= g;
        }
        let z = match standardize_filtered(&filtered) {
            Ok(z) => z,
            Err(Error::ZeroVariance) => continue,
            Err(e) => return Err(e),
        };
        let w = z.width();
        for (i, &v) in z.data().iter().enumerate() {
            let score = log_nfa(v, n_tests)?;
            if score <= log_eps {
                out.push(Detection {
                    scale,
                    channel,
                    radius: kernel.radius(),
                    x: i % w,
                    y: i / w,
                    log_nfa: score,
                });
            }
        }
    }
    Ok(out)
}

fn kernels(radii: &[usize]) -> Result<Vec<DiskKernel>> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("no kernel radii".into()));
    }
    radii.iter().map(|&r| DiskKernel::new(r)).collect()
}

fn finish(mut dets: Vec<Detection>) -> Vec<Detection> {
    dets.sort_by_key(Detection::sort_key);
    dets
}

/// Runs the test on fields that already follow the naive model (one entry
/// per scale, one plane per channel), skipping the GGD stage.
pub fn detect_gaussian_fields(
    fields: &[Vec<Plane>],
    radii: &[usize],
    log_eps: f64,
) -> Result<Vec<Detection>> {
    let kernels = kernels(radii)?;
    let n_channels = fields.first().map_or(0, Vec::len);
    let budget = TestBudget::from_sizes(
        fields
            .iter()
            .map(|planes| (planes[0].width(), planes[0].height())),
        kernels.len(),
        n_channels,
    );
    let jobs: Vec<(usize, usize, &Plane)> = fields
        .iter()
        .enumerate()
        .flat_map(|(s, planes)| planes.iter().enumerate().map(move |(c, p)| (s, c, p)))
        .collect();
    let parts = jobs
        .par_iter()
        .map(|&(s, c, p)| detect_in_plane(p, s, c, &kernels, budget.total, log_eps))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(parts.into_iter().flatten().collect()))
}

/// Full a-contrario pass over a residual pyramid.
///
/// Each (scale, channel) plane gets its own GGD fit and Gaussianization, then
/// every radius is filtered, standardized and tested against the shared
/// budget. Planes that cannot be fitted (constant, fewer samples than the fit
/// needs, or RMS below [`MIN_RESIDUAL_RMS`]) yield no detections. Output is sorted by
/// (scale, channel, radius, y, x).
pub fn detect(residuals: &[Residual], radii: &[usize], log_eps: f64) -> Result<Vec<Detection>> {
    let first = residuals
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty residual pyramid".into()))?;
    let kernels = kernels(radii)?;
    let budget = TestBudget::from_sizes(
        residuals.iter().map(|r| (r.width(), r.height())),
        kernels.len(),
        first.channels(),
    );
    let jobs: Vec<(usize, usize, &Plane)> = residuals
        .iter()
        .enumerate()
        .flat_map(|(s, r)| r.planes().iter().enumerate().map(move |(c, p)| (s, c, p)))
        .collect();
    let parts = jobs
        .par_iter()
        .map(|&(s, c, plane)| {
            let rms = (plane.data().iter().map(|v| v * v).sum::<f64>() / plane.len() as f64).sqrt();
            if rms < MIN_RESIDUAL_RMS {
                log::debug!("scale {s} channel {c}: residual RMS {rms:e} is round-off, skipped");
                return Ok(Vec::new());
            }
            let fit = match fit_ggd(plane.data()) {
                Ok(f) => f,
                Err(Error::ZeroVariance | Error::TooFewSamples { .. }) => {
                    log::debug!("scale {s} channel {c}: residual not testable, skipped");
                    return Ok(Vec::new());
                }
                Err(e) => return Err(e),
            };
            let field = gaussianize(plane, &fit);
            detect_in_plane(&field, s, c, &kernels, budget.total, log_eps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(parts.into_iter().flatten().collect()))
}
