use super::{mirror, ImageBuffer, Plane};
use crate::error::{Error, Result};

/// Standard deviation of the anti-aliasing blur applied before each decimation.
pub const PYRAMID_SIGMA: f64 = 0.8;

/// Dyadic Gaussian pyramid; level 0 is the input frame.
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<ImageBuffer>,
}

impl Pyramid {
    pub fn levels(&self) -> &[ImageBuffer] {
        &self.levels
    }

    pub fn level(&self, s: usize) -> &ImageBuffer {
        &self.levels[s]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Wraps prebuilt levels; each must be the dyadic halving of the previous.
    pub fn from_levels(levels: Vec<ImageBuffer>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("empty pyramid".into()));
        }
        for pair in levels.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.width() != a.width() / 2
                || b.height() != a.height() / 2
                || b.channels() != a.channels()
            {
                return Err(Error::DimensionMismatch(
                    "pyramid levels must halve in each axis".into(),
                ));
            }
        }
        Ok(Self { levels })
    }
}

/// Largest scale count whose coarsest level still fits a `side × side` patch.
pub fn max_feasible_scales(width: usize, height: usize, side: usize) -> usize {
    let mut m = width.min(height);
    let mut n = 0;
    while m >= side.max(1) {
        n += 1;
        m /= 2;
    }
    n
}

pub fn build_pyramid(img: &ImageBuffer, n_scales: usize, patch_side: usize) -> Result<Pyramid> {
    if n_scales == 0 {
        return Err(Error::InvalidParameter("n_scales must be >= 1".into()));
    }
    let max = max_feasible_scales(img.width(), img.height(), patch_side);
    if n_scales > max {
        return Err(Error::TooManyScales {
            requested: n_scales,
            max_feasible: max,
        });
    }
    let mut levels = Vec::with_capacity(n_scales);
    levels.push(img.clone());
    for _ in 1..n_scales {
        let prev = levels.last().unwrap();
        let planes = prev
            .planes()
            .iter()
            .map(|p| decimate(&gaussian_blur(p, PYRAMID_SIGMA)))
            .collect();
        levels.push(ImageBuffer::from_planes(planes)?);
    }
    Ok(Pyramid { levels })
}

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Separable Gaussian blur with mirrored borders.
pub(crate) fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    let taps = gaussian_taps(sigma);
    let (w, h) = (p.width(), p.height());
    let r = (taps.len() / 2) as isize;
    let mut tmp = Plane::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * p.get(mirror(x as isize + k as isize - r, w), y);
            }
            tmp.set(x, y, acc);
        }
    }
    let mut out = Plane::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * tmp.get(x, mirror(y as isize + k as isize - r, h));
            }
            out.set(x, y, acc);
        }
    }
    out
}

pub(crate) fn decimate(p: &Plane) -> Plane {
    Plane::from_fn(p.width() / 2, p.height() / 2, |x, y| p.get(2 * x, 2 * y))
}
