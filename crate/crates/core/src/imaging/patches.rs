use super::{ImageBuffer, Plane};
use crate::error::{Error, Result};

/// Every square patch of an image, flattened into columns.
///
/// A column holds the patch channel-major: all channel-0 values row-major,
/// then channel 1, then channel 2. Origins are `(row, col)` of the top-left
/// pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix {
    side: usize,
    channels: usize,
    dim: usize,
    columns: Vec<f64>,
    origins: Vec<(usize, usize)>,
}

impl PatchMatrix {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Length of a patch vector (`side² · channels`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.origins.len()
    }

    pub fn column(&self, p: usize) -> &[f64] {
        &self.columns[p * self.dim..(p + 1) * self.dim]
    }

    pub fn columns(&self) -> &[f64] {
        &self.columns
    }

    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }
}

fn positions(len: usize, side: usize, stride: usize) -> Vec<usize> {
    let last = len - side;
    let mut v: Vec<usize> = (0..=last).step_by(stride).collect();
    // Keep the far border covered when the stride does not land on it.
    if *v.last().unwrap() != last {
        v.push(last);
    }
    v
}

/// Extracts all `side × side` patches at the given stride, row-major over origins.
///
/// Every pixel is covered when `stride <= side`.
pub fn extract_patches(img: &ImageBuffer, side: usize, stride: usize) -> Result<PatchMatrix> {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    if side == 0 || side > w || side > h {
        return Err(Error::PatchTooLarge {
            side,
            width: w,
            height: h,
        });
    }
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    let rows = positions(h, side, stride);
    let cols = positions(w, side, stride);
    let dim = side * side * ch;
    let mut columns = Vec::with_capacity(rows.len() * cols.len() * dim);
    let mut origins = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        for &j in &cols {
            for c in 0..ch {
                let plane = img.channel(c);
                for dy in 0..side {
                    let start = (i + dy) * w + j;
                    columns.extend_from_slice(&plane[start..start + side]);
                }
            }
            origins.push((i, j));
        }
    }
    Ok(PatchMatrix {
        side,
        channels: ch,
        dim,
        columns,
        origins,
    })
}

/// Adds each patch column into `sums` and bumps the per-pixel coverage in `counts`.
///
/// `columns` is laid out like [`PatchMatrix::columns`], one column per origin.
pub fn place_patches(
    sums: &mut ImageBuffer,
    counts: &mut Plane,
    side: usize,
    origins: &[(usize, usize)],
    columns: &[f64],
) -> Result<()> {
    let (w, h, ch) = (sums.width(), sums.height(), sums.channels());
    if counts.width() != w || counts.height() != h {
        return Err(Error::DimensionMismatch(
            "coverage counts differ from accumulator geometry".into(),
        ));
    }
    let dim = side * side * ch;
    if columns.len() != dim * origins.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} patches of dimension {}",
            columns.len(),
            origins.len(),
            dim
        )));
    }
    for (p, &(i, j)) in origins.iter().enumerate() {
        if i + side > h || j + side > w {
            return Err(Error::OriginOutOfBounds { x: j, y: i });
        }
        let col = &columns[p * dim..(p + 1) * dim];
        for c in 0..ch {
            let plane = sums.channel_mut(c);
            for dy in 0..side {
                let src = &col[(c * side + dy) * side..(c * side + dy + 1) * side];
                let start = (i + dy) * w + j;
                for (dst, v) in plane[start..start + side].iter_mut().zip(src) {
                    *dst += v;
                }
            }
        }
        let cnt = counts.data_mut();
        for dy in 0..side {
            let start = (i + dy) * w + j;
            for v in &mut cnt[start..start + side] {
                *v += 1.0;
            }
        }
    }
    Ok(())
}
