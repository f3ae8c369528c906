#![allow(dead_code)]

use floatdet::{ImageBuffer, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_plane(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Plane {
    Plane::from_fn(w, h, |_, _| StandardNormal.sample(rng))
}

/// Two-level checkerboard with `cell`-pixel squares.
pub fn checker(x: usize, y: usize, cell: usize) -> f64 {
    if (x / cell + y / cell) % 2 == 0 {
        90.0
    } else {
        130.0
    }
}

pub fn checker_image(w: usize, h: usize, cell: usize) -> ImageBuffer {
    let mut img = ImageBuffer::filled(w, h, 1, 0.0);
    for y in 0..h {
        for x in 0..w {
            img.set(x, y, 0, checker(x, y, cell));
        }
    }
    img
}

pub fn add_noise(img: &mut ImageBuffer, sigma: f64, rng: &mut ChaCha8Rng) {
    let n = Normal::new(0.0, sigma).unwrap();
    for v in img.data_mut() {
        *v += n.sample(rng);
    }
}

pub fn uniform_image(w: usize, h: usize, ch: usize, rng: &mut ChaCha8Rng) -> ImageBuffer {
    let data = (0..w * h * ch)
        .map(|_| rng.random_range(0.0..255.0))
        .collect();
    ImageBuffer::new(w, h, ch, data).unwrap()
}

/// Least squares `min ‖D_S a − y‖` by Householder QR of the support atoms.
/// Returns the coefficients and the squared residual, or `None` when the
/// support is numerically rank deficient.
pub fn least_squares(atoms: &[&[f64]], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = atoms.len();
    let n = y.len();
    if m > n {
        return None;
    }
    // Column-major copy of the support, reduced in place to R.
    let mut a: Vec<Vec<f64>> = atoms.iter().map(|c| c.to_vec()).collect();
    let mut b = y.to_vec();
    for j in 0..m {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return None;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v = a[j][j..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let s = 2.0 * v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum::<f64>() / vv;
            for (c, p) in col[j..].iter_mut().zip(&v) {
                *c -= s * p;
            }
        };
        for col in a.iter_mut().skip(j) {
            reflect(col);
        }
        reflect(&mut b);
    }
    let mut coef = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = b[i];
        for t in i + 1..m {
            acc -= a[t][i] * coef[t];
        }
        coef[i] = acc / a[i][i];
    }
    let res2 = b[m..].iter().map(|v| v * v).sum();
    Some((coef, res2))
}
