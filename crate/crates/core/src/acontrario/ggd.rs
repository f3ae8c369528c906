use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::imaging::Plane;

pub const BETA_MIN: f64 = 0.2;
pub const BETA_MAX: f64 = 5.0;
pub const MIN_SAMPLES: usize = 100;
/// Gaussianized values are clamped to `[-GAUSSIAN_CLAMP, GAUSSIAN_CLAMP]`.
pub const GAUSSIAN_CLAMP: f64 = 8.0;

const BISECTION_STEPS: usize = 200;

/// Zero-mean generalized Gaussian with density
/// `β / (2 α Γ(1/β)) · exp(-(|v|/α)^β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GgdFit {
    pub alpha: f64,
    pub beta: f64,
}

impl GgdFit {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "GGD parameters alpha={alpha}, beta={beta} must be finite and positive"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn variance(&self) -> f64 {
        self.alpha * self.alpha * (ln_gamma(3.0 / self.beta) - ln_gamma(1.0 / self.beta)).exp()
    }

    /// `P(X ≥ |v|)` expressed as a regularized upper incomplete gamma, halved.
    fn upper_tail_mass(&self, v: f64) -> f64 {
        let t = (v.abs() / self.alpha).powf(self.beta);
        gamma_ur(1.0 / self.beta, t)
    }

    pub fn cdf(&self, v: f64) -> f64 {
        let q = 0.5 * self.upper_tail_mass(v);
        if v >= 0.0 {
            1.0 - q
        } else {
            q
        }
    }

    /// `Φ⁻¹(F(v))`, evaluated on the smaller tail for accuracy, then clamped.
    pub fn to_gaussian(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        // Φ⁻¹(1 - q/2) = √2 · erfc⁻¹(q)
        let z = SQRT_2 * erfc_inv(self.upper_tail_mass(v));
        let z = if v > 0.0 { z } else { -z };
        z.clamp(-GAUSSIAN_CLAMP, GAUSSIAN_CLAMP)
    }
}

/// `E r² / (E|r|)²` for a GGD of shape `beta`; strictly decreasing in `beta`.
pub(crate) fn moment_ratio(beta: f64) -> f64 {
    (ln_gamma(1.0 / beta) + ln_gamma(3.0 / beta) - 2.0 * ln_gamma(2.0 / beta)).exp()
}

/// Fits a zero-mean GGD by matching `E r² / (E|r|)²`, solving for the shape
/// by bisection on `[BETA_MIN, BETA_MAX]` and the scale from the second moment.
pub fn fit_ggd(samples: &[f64]) -> Result<GgdFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: MIN_SAMPLES,
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let m1 = samples.iter().map(|v| v.abs()).sum::<f64>() / n;
    let m2 = samples.iter().map(|v| v * v).sum::<f64>() / n;
    let target = m2 / (m1 * m1);

    let beta = if target >= moment_ratio(BETA_MIN) {
        BETA_MIN
    } else if target <= moment_ratio(BETA_MAX) {
        BETA_MAX
    } else {
        let (mut lo, mut hi) = (BETA_MIN, BETA_MAX);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if moment_ratio(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let alpha = (m2 * (ln_gamma(1.0 / beta) - ln_gamma(3.0 / beta)).exp()).sqrt();
    GgdFit::new(alpha, beta)
}

/// Maps every value through the fitted CDF and the standard normal quantile.
pub fn gaussianize(plane: &Plane, fit: &GgdFit) -> Plane {
    let data: Vec<f64> = plane
        .data()
        .par_iter()
        .map(|&v| fit.to_gaussian(v))
        .collect();
    Plane::new(plane.width(), plane.height(), data).expect("same geometry")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_reference_values() {
        // Γ(1/β)Γ(3/β)/Γ(2/β)² at 50 digits.
        for (beta, expect) in [
            (0.8, 2.268_634_256_306_84),
            (1.0, 2.0),
            (2.0, std::f64::consts::FRAC_PI_2),
            (3.0, 1.460_998_486_206_32),
        ] {
            assert!((moment_ratio(beta) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_is_monotone() {
        let mut prev = f64::INFINITY;
        for i in 0..=480 {
            let b = BETA_MIN + i as f64 * 0.01;
            let r = moment_ratio(b);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn constant_input_errors() {
        assert!(matches!(fit_ggd(&[3.0; 200]), Err(Error::ZeroVariance)));
        assert!(matches!(
            fit_ggd(&[1.0; 10]),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn zero_maps_to_zero() {
        let fit = GgdFit::new(1.3, 0.7).unwrap();
        assert_eq!(fit.to_gaussian(0.0), 0.0);
    }

    #[test]
    fn standard_normal_fit_is_identity() {
        let fit = GgdFit::new(SQRT_2, 2.0).unwrap();
        assert!((fit.variance() - 1.0).abs() < 1e-12);
        for i in -400..=400 {
            let v = i as f64 * 0.01;
            assert!((fit.to_gaussian(v) - v).abs() < 1e-6, "v={v}");
        }
    }

    #[test]
    fn laplacian_cdf_closed_form() {
        // β = 1: F(v) = 1 - exp(-v/α)/2 for v >= 0.
        let fit = GgdFit::new(2.0, 1.0).unwrap();
        for v in [0.1, 1.0, 3.0, 10.0] {
            assert!((fit.cdf(v) - (1.0 - 0.5 * (-v / 2.0f64).exp())).abs() < 1e-12);
            assert!((fit.cdf(-v) - 0.5 * (-v / 2.0f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_values_clamp() {
        let fit = GgdFit::new(1.0, 2.0).unwrap();
        assert_eq!(fit.to_gaussian(1e6), GAUSSIAN_CLAMP);
        assert_eq!(fit.to_gaussian(-1e6), -GAUSSIAN_CLAMP);
    }

    proptest::proptest! {
        #[test]
        fn transform_is_monotone(
            alpha in 0.1f64..10.0, beta in 0.2f64..5.0, a in -50.0f64..50.0, b in -50.0f64..50.0
        ) {
            let fit = GgdFit::new(alpha, beta).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            proptest::prop_assert!(fit.to_gaussian(lo) <= fit.to_gaussian(hi));
        }
    }
}
