use super::{mirror, Plane};
use crate::error::{Error, Result};

/// Uniform averaging kernel over the integer points of a Euclidean disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskKernel {
    radius: usize,
    offsets: Vec<(isize, isize)>,
    weight: f64,
}

impl DiskKernel {
    pub fn new(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidParameter("disk radius must be >= 1".into()));
        }
        let r = radius as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    offsets.push((dx, dy));
                }
            }
        }
        let weight = 1.0 / offsets.len() as f64;
        Ok(Self {
            radius,
            offsets,
            weight,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Number of pixels in the support.
    pub fn support(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    /// The dense `(2r+1)²` weight grid, row-major.
    pub fn weights(&self) -> Vec<f64> {
        let side = 2 * self.radius + 1;
        let mut grid = vec![0.0; side * side];
        for &(dx, dy) in &self.offsets {
            let x = (dx + self.radius as isize) as usize;
            let y = (dy + self.radius as isize) as usize;
            grid[y * side + x] = self.weight;
        }
        grid
    }
}

/// Mean over the disk neighbourhood of each pixel, with mirrored borders.
pub fn convolve_disk(plane: &Plane, kernel: &DiskKernel) -> Result<Plane> {
    let (w, h) = (plane.width(), plane.height());
    let r = kernel.radius;
    if w < 2 * r + 1 || h < 2 * r + 1 {
        return Err(Error::PlaneTooSmall {
            width: w,
            height: h,
            radius: r,
        });
    }
    let ri = r as isize;
    let xmap: Vec<usize> = (-ri..w as isize + ri).map(|i| mirror(i, w)).collect();
    let ymap: Vec<usize> = (-ri..h as isize + ri).map(|i| mirror(i, h)).collect();
    let src = plane.data();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let row = &mut out[y * w..(y + 1) * w];
        for &(dx, dy) in &kernel.offsets {
            let sy = ymap[(y as isize + dy + ri) as usize];
            let src_row = &src[sy * w..(sy + 1) * w];
            let base = (dx + ri) as usize;
            for (x, o) in row.iter_mut().enumerate() {
                *o += src_row[xmap[base + x]];
            }
        }
        for o in row.iter_mut() {
            *o *= kernel.weight;
        }
    }
    Plane::new(w, h, out)
}

/// Per-pixel factor that restores unit variance after [`convolve_disk`] of
/// i.i.d. unit-variance input.
///
/// Near a border the mirror maps several kernel taps onto the same source
/// pixel, so the filtered value has variance `Σ cⱼ² / |D|²` (`cⱼ` = taps
/// landing on pixel `j`) instead of `1 / |D|`. The gain is the square root of
/// their ratio; it is exactly 1 wherever the disk fits inside the plane.
pub fn mirror_gain(width: usize, height: usize, kernel: &DiskKernel) -> Plane {
    let r = kernel.radius;
    let mut gain = Plane::filled(width, height, 1.0);
    let support = kernel.support() as f64;
    let mut taps: Vec<(usize, usize)> = Vec::with_capacity(kernel.support());
    for y in 0..height {
        let near_y = y < r || y + r >= height;
        for x in 0..width {
            if !near_y && x >= r && x + r < width {
                continue;
            }
            taps.clear();
            taps.extend(kernel.offsets.iter().map(|&(dx, dy)| {
                (
                    mirror(y as isize + dy, height),
                    mirror(x as isize + dx, width),
                )
            }));
            taps.sort_unstable();
            let mut sum_sq = 0usize;
            let mut run = 0usize;
            for (i, t) in taps.iter().enumerate() {
                run += 1;
                if taps.get(i + 1) != Some(t) {
                    sum_sq += run * run;
                    run = 0;
                }
            }
            gain.set(x, y, (support / sum_sq as f64).sqrt());
        }
    }
    gain
}
