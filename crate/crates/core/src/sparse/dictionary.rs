use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::PatchMatrix;

/// Allowed deviation of an atom's Euclidean norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

const MIN_PATCH_NORM: f64 = 1e-12;

/// An `n × k` matrix of unit-norm atoms, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    dim: usize,
    atoms: Vec<f64>,
}

impl Dictionary {
    /// Builds a dictionary from column-major atoms, checking that each is unit-norm.
    pub fn new(dim: usize, atoms: Vec<f64>) -> Result<Self> {
        if dim == 0 || atoms.is_empty() || !atoms.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not form columns of length {}",
                atoms.len(),
                dim
            )));
        }
        let d = Self { dim, atoms };
        d.check_normalized()?;
        Ok(d)
    }

    /// Builds a dictionary by normalizing each column; zero columns are rejected.
    pub fn from_columns(dim: usize, mut atoms: Vec<f64>) -> Result<Self> {
        if dim == 0 || atoms.is_empty() || !atoms.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not form columns of length {}",
                atoms.len(),
                dim
            )));
        }
        for (l, col) in atoms.chunks_exact_mut(dim).enumerate() {
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < MIN_PATCH_NORM {
                return Err(Error::NotNormalized(l));
            }
            col.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(Self { dim, atoms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn atom(&self, l: usize) -> &[f64] {
        &self.atoms[l * self.dim..(l + 1) * self.dim]
    }

    pub(crate) fn atom_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.atoms[l * self.dim..(l + 1) * self.dim]
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn check_normalized(&self) -> Result<()> {
        for (l, col) in self.atoms.chunks_exact(self.dim).enumerate() {
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::NotNormalized(l));
            }
        }
        Ok(())
    }

    /// `Dᵀ D`, row-major `k × k`.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.atom_count();
        let mut g = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let v = dot(self.atom(a), self.atom(b));
                g[a * k + b] = v;
                g[b * k + a] = v;
            }
        }
        g
    }

    /// Plain-text dump: a `n k` header, then `n` rows of `k` values.
    pub fn to_text(&self) -> String {
        let (n, k) = (self.dim, self.atom_count());
        let mut s = format!("{n} {k}\n");
        for i in 0..n {
            let row: Vec<String> = (0..k)
                .map(|l| format!("{:e}", self.atoms[l * n + i]))
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParameter(format!("dictionary dump: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("missing header"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad header")))
            .collect::<Result<_>>()?;
        let [n, k] = dims[..] else {
            return Err(bad("header must be `n k`"));
        };
        let mut atoms = vec![0.0; n * k];
        for i in 0..n {
            let line = lines.next().ok_or_else(|| bad("missing row"))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad value")))
                .collect::<Result<_>>()?;
            if vals.len() != k {
                return Err(bad("row length differs from k"));
            }
            for (l, v) in vals.into_iter().enumerate() {
                atoms[l * n + i] = v;
            }
        }
        Self::new(n, atoms)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Seeds a dictionary with `k` distinct, randomly drawn, normalized patches.
///
/// Near-zero patches are skipped and the draw continues, so the result is
/// the first `k` usable patches of a seeded permutation.
pub fn init_dictionary(patches: &PatchMatrix, k: usize, seed: u64) -> Result<Dictionary> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "dictionary size must be >= 1".into(),
        ));
    }
    let n = patches.dim();
    if k > patches.count() {
        return Err(Error::NotEnoughPatches {
            usable: patches.count(),
            requested: k,
        });
    }
    let mut order: Vec<usize> = (0..patches.count()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut atoms = Vec::with_capacity(n * k);
    let mut taken = 0;
    for p in order {
        let col = patches.column(p);
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < MIN_PATCH_NORM {
            continue;
        }
        atoms.extend(col.iter().map(|v| v / norm));
        taken += 1;
        if taken == k {
            break;
        }
    }
    if taken < k {
        return Err(Error::NotEnoughPatches {
            usable: taken,
            requested: k,
        });
    }
    if k < n {
        log::warn!("dictionary of {k} atoms is undercomplete for patch dimension {n}");
    }
    Ok(Dictionary { dim: n, atoms })
}
