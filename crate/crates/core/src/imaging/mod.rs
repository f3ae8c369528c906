//! Image containers and the low-level image operations shared by every
//! later stage: frame I/O, Gaussian pyramids, patch extraction and
//! disk-kernel filtering.
//!
//! Intensities stay in their native `[0, 255]` range as `f64`. Multi-channel
//! images are stored planar: all of channel 0 row-major, then channel 1, and
//! so on.

mod io;
mod kernel;
mod patches;
mod pyramid;

pub use io::{load_frame, save_png};
pub use kernel::{convolve_disk, mirror_gain, DiskKernel};
pub use patches::{extract_patches, place_patches, PatchMatrix};
pub use pyramid::{build_pyramid, max_feasible_scales, Pyramid, PYRAMID_SIGMA};
pub(crate) use pyramid::{decimate, gaussian_blur};

use crate::error::{Error, Result};

/// A single-channel 2-D grid of reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::InvalidBuffer(format!(
                "plane {}x{} needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// An H×W×C image with planar channel storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidBuffer(format!(
                "expected 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidBuffer(format!(
                "{}x{}x{} image needs {} values, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Stacks equally sized planes into one image.
    pub fn from_planes(planes: Vec<Plane>) -> Result<Self> {
        let first = planes.first().ok_or(Error::EmptyImage)?;
        let (w, h) = (first.width, first.height);
        if planes.iter().any(|p| p.width != w || p.height != h) {
            return Err(Error::DimensionMismatch(
                "planes of differing geometry".into(),
            ));
        }
        let channels = planes.len();
        let mut data = Vec::with_capacity(w * h * channels);
        for p in planes {
            data.extend_from_slice(&p.data);
        }
        Self::new(w, h, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_geometry(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.width * self.height;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn plane(&self, c: usize) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.channel(c).to_vec(),
        }
    }

    pub fn planes(&self) -> Vec<Plane> {
        (0..self.channels).map(|c| self.plane(c)).collect()
    }

    /// Luminance plane (0.299 R + 0.587 G + 0.114 B); grayscale is returned as is.
    pub fn luminance(&self) -> Plane {
        if self.channels == 1 {
            return self.plane(0);
        }
        let (r, g, b) = (self.channel(0), self.channel(1), self.channel(2));
        let data = r
            .iter()
            .zip(g)
            .zip(b)
            .map(|((&r, &g), &b)| 0.299 * r + 0.587 * g + 0.114 * b)
            .collect();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> ImageBuffer {
        ImageBuffer {
            data: self.data.iter().map(|v| v.clamp(lo, hi)).collect(),
            ..self.clone()
        }
    }
}

/// Half-sample symmetric reflection of `i` into `[0, n)`: `-1 -> 0`, `n -> n - 1`.
#[inline]
pub(crate) fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}
