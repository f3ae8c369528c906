use serde::{Deserialize, Serialize};

use super::dictionary::{init_dictionary, Dictionary};
use super::ksvd::ksvd_iterate;
use super::ormp::{code_all, recode_no_worse, SparseCode};
use crate::error::{Error, Result};
use crate::imaging::{extract_patches, place_patches, ImageBuffer, PatchMatrix, Plane};

/// Lower bound on the noise estimate, so the fidelity weight `30/σ` stays finite
/// on noise-free input.
pub const SIGMA_FLOOR: f64 = 0.25;

/// Dictionary learning and reconstruction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseParams {
    /// Side of the square patches.
    pub patch_side: usize,
    /// Number of atoms `k`.
    pub dict_size: usize,
    /// ORMP stopping threshold on the residual norm.
    pub ormp_epsilon: f64,
    /// Number of {sparse coding, dictionary update} rounds.
    pub k_iter: usize,
    /// Fidelity weight; `30/σ` when unset.
    pub lambda: Option<f64>,
    /// Noise standard deviation; estimated from the image when unset.
    pub sigma: Option<f64>,
    /// Atom cap per patch; half the patch dimension when unset.
    pub max_atoms: Option<usize>,
    pub stride: usize,
    pub rng_seed: u64,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        Self {
            patch_side: 4,
            dict_size: 64,
            ormp_epsilon: 1e-6,
            k_iter: 7,
            lambda: None,
            sigma: None,
            max_atoms: None,
            stride: 1,
            rng_seed: 0,
        }
    }
}

impl DenoiseParams {
    pub fn validate(&self, channels: usize) -> Result<()> {
        let dim = self.patch_side * self.patch_side * channels;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.patch_side < 2 {
            return bad(format!("patch side {} < 2", self.patch_side));
        }
        if self.dict_size == 0 {
            return bad("dictionary size must be >= 1".into());
        }
        if self.k_iter == 0 {
            return bad("k_iter must be >= 1".into());
        }
        if !(self.ormp_epsilon >= 0.0) {
            return bad("ORMP epsilon must be >= 0".into());
        }
        if self.stride == 0 || self.stride > self.patch_side {
            return bad(format!(
                "stride {} outside [1, patch side {}]",
                self.stride, self.patch_side
            ));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return bad(format!("lambda {l} must be finite and >= 0"));
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) || !s.is_finite() {
                return bad(format!("sigma {s} must be finite and > 0"));
            }
        }
        if let Some(m) = self.max_atoms {
            if m == 0 || m > dim {
                return bad(format!("max_atoms {m} outside [1, {dim}]"));
            }
        }
        Ok(())
    }

    pub fn max_atoms_for(&self, dim: usize) -> usize {
        self.max_atoms.unwrap_or((dim / 2).max(1))
    }
}

/// Output of [`denoise`].
#[derive(Debug, Clone)]
pub struct Denoised {
    /// Closed-form reconstruction, before clamping.
    pub reconstruction: ImageBuffer,
    pub dictionary: Dictionary,
    pub sigma: f64,
    pub lambda: f64,
}

impl Denoised {
    /// Reconstruction clamped to the displayable range.
    pub fn clamped(&self) -> ImageBuffer {
        self.reconstruction.clamped(0.0, 255.0)
    }
}

/// Signed per-channel difference between an image and its reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    planes: Vec<Plane>,
}

impl Residual {
    pub fn from_planes(planes: Vec<Plane>) -> Result<Self> {
        let first = planes.first().ok_or(Error::EmptyImage)?;
        if planes
            .iter()
            .any(|p| p.width() != first.width() || p.height() != first.height())
        {
            return Err(Error::DimensionMismatch(
                "residual planes of differing geometry".into(),
            ));
        }
        Ok(Self { planes })
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> Residual {
        Residual {
            planes: self.planes.iter().map(|p| p.map(f)).collect(),
        }
    }
}

/// `input − reconstruction`, unclamped.
pub fn residual(input: &ImageBuffer, reconstruction: &ImageBuffer) -> Result<Residual> {
    if !input.same_geometry(reconstruction) {
        return Err(Error::DimensionMismatch(format!(
            "input {}x{}x{} vs reconstruction {}x{}x{}",
            input.width(),
            input.height(),
            input.channels(),
            reconstruction.width(),
            reconstruction.height(),
            reconstruction.channels()
        )));
    }
    let planes = (0..input.channels())
        .map(|c| {
            let data = input
                .channel(c)
                .iter()
                .zip(reconstruction.channel(c))
                .map(|(y, x)| y - x)
                .collect();
            Plane::new(input.width(), input.height(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Residual { planes })
}

/// Noise level from the MAD of the 4-neighbour Laplacian of the luminance.
pub fn estimate_sigma(img: &ImageBuffer) -> f64 {
    let lum = img.luminance();
    let (w, h) = (lum.width(), lum.height());
    if w < 3 || h < 3 {
        return SIGMA_FLOOR;
    }
    let mut lap = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            lap.push(
                lum.get(x - 1, y) + lum.get(x + 1, y) + lum.get(x, y - 1) + lum.get(x, y + 1)
                    - 4.0 * lum.get(x, y),
            );
        }
    }
    let med = median(&mut lap.clone());
    let mut dev: Vec<f64> = lap.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&mut dev);
    (mad / (0.6745 * 20f64.sqrt())).max(SIGMA_FLOOR)
}

fn median(v: &mut [f64]) -> f64 {
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *m;
    if v.len() % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Closed-form minimiser of `λ‖x − y‖² + Σ ‖D αₚ − Rₚ x‖²`: each pixel is
/// `(λ y + Σ covering patch values) / (λ + coverage)`.
pub fn reconstruct(
    img: &ImageBuffer,
    patches: &PatchMatrix,
    dict: &Dictionary,
    codes: &[SparseCode],
    lambda: f64,
) -> Result<ImageBuffer> {
    if codes.len() != patches.count() {
        return Err(Error::DimensionMismatch(format!(
            "{} codes for {} patches",
            codes.len(),
            patches.count()
        )));
    }
    let n = patches.dim();
    let mut columns = vec![0.0; n * codes.len()];
    for (col, code) in columns.chunks_exact_mut(n).zip(codes) {
        code.reconstruct_into(dict, col);
    }
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut sums = ImageBuffer::filled(w, h, ch, 0.0);
    let mut counts = Plane::filled(w, h, 0.0);
    place_patches(
        &mut sums,
        &mut counts,
        patches.side(),
        patches.origins(),
        &columns,
    )?;
    let counts = counts.data();
    let mut out = sums;
    for c in 0..ch {
        let y = img.channel(c);
        for ((o, &yv), &cnt) in out.channel_mut(c).iter_mut().zip(y).zip(counts) {
            *o = (lambda * yv + *o) / (lambda + cnt);
        }
    }
    Ok(out)
}

/// Learns a dictionary on the image's own patches and reconstructs it.
///
/// Runs `k_iter` rounds of {ORMP on every patch, K-SVD sweep} and a final
/// ORMP pass against the last dictionary, then the closed-form averaging.
/// Re-coding after the first round keeps a patch's previous code when ORMP
/// does worse (see [`recode_no_worse`]), so the learning objective never rises.
pub fn denoise(img: &ImageBuffer, params: &DenoiseParams) -> Result<Denoised> {
    denoise_inner(img, params, None)
}

/// Reconstructs with a fixed, previously learned dictionary (no learning rounds).
pub fn denoise_with_dictionary(
    img: &ImageBuffer,
    params: &DenoiseParams,
    dict: &Dictionary,
) -> Result<Denoised> {
    denoise_inner(img, params, Some(dict))
}

fn denoise_inner(
    img: &ImageBuffer,
    params: &DenoiseParams,
    fixed: Option<&Dictionary>,
) -> Result<Denoised> {
    params.validate(img.channels())?;
    let patches = extract_patches(img, params.patch_side, params.stride)?;
    let max_atoms = params.max_atoms_for(patches.dim());
    let sigma = params.sigma.unwrap_or_else(|| estimate_sigma(img));
    let lambda = params.lambda.unwrap_or(30.0 / sigma);

    let (dictionary, codes) = match fixed {
        Some(d) => {
            if d.dim() != patches.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "reused dictionary of dimension {} for patches of dimension {}",
                    d.dim(),
                    patches.dim()
                )));
            }
            (d.clone(), None)
        }
        None => {
            let mut dict = init_dictionary(&patches, params.dict_size, params.rng_seed)?;
            let mut codes = code_all(&dict, &patches, params.ormp_epsilon, max_atoms)?;
            for _ in 0..params.k_iter {
                dict = ksvd_iterate(&patches, &dict, &mut codes)?;
                recode_no_worse(&dict, &patches, params.ormp_epsilon, max_atoms, &mut codes)?;
            }
            (dict, Some(codes))
        }
    };
    let codes = match codes {
        Some(c) => c,
        None => code_all(&dictionary, &patches, params.ormp_epsilon, max_atoms)?,
    };
    let reconstruction = reconstruct(img, &patches, &dictionary, &codes, lambda)?;
    Ok(Denoised {
        reconstruction,
        dictionary,
        sigma,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_of_identical_is_zero() {
        let img = ImageBuffer::filled(5, 4, 3, 12.0);
        let r = residual(&img, &img).unwrap();
        assert!(r
            .planes()
            .iter()
            .all(|p| p.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn residual_is_signed_difference() {
        let mut a = ImageBuffer::filled(3, 3, 1, 100.0);
        let b = ImageBuffer::filled(3, 3, 1, 98.0);
        a.set(1, 1, 0, 100.0);
        let r = residual(&a, &b).unwrap();
        assert_eq!(r.planes()[0].get(1, 1), 2.0);
        let r = residual(&b, &a).unwrap();
        assert_eq!(r.planes()[0].get(0, 0), -2.0);
    }

    #[test]
    fn residual_geometry_mismatch() {
        let a = ImageBuffer::filled(3, 3, 1, 0.0);
        let b = ImageBuffer::filled(3, 4, 1, 0.0);
        assert!(matches!(residual(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn huge_lambda_returns_input() {
        let data: Vec<f64> = (0..256).map(|i| ((i * 37) % 251) as f64).collect();
        let img = ImageBuffer::new(16, 16, 1, data).unwrap();
        let params = DenoiseParams {
            dict_size: 16,
            k_iter: 2,
            lambda: Some(1e12),
            ..Default::default()
        };
        let out = denoise(&img, &params).unwrap();
        for (a, b) in out.reconstruction.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn sigma_estimate_tracks_noise() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 10.0).unwrap();
        let data = (0..128 * 128)
            .map(|_| 100.0 + noise.sample(&mut rng))
            .collect();
        let img = ImageBuffer::new(128, 128, 1, data).unwrap();
        let s = estimate_sigma(&img);
        assert!((s - 10.0).abs() < 1.0, "sigma estimate {s}");
        assert_eq!(
            estimate_sigma(&ImageBuffer::filled(16, 16, 1, 3.0)),
            SIGMA_FLOOR
        );
    }

    #[test]
    fn params_validation() {
        let p = DenoiseParams {
            max_atoms: Some(17),
            ..Default::default()
        };
        assert!(p.validate(1).is_err());
        assert!(p.validate(3).is_ok());
        let p = DenoiseParams {
            patch_side: 1,
            ..Default::default()
        };
        assert!(p.validate(1).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
