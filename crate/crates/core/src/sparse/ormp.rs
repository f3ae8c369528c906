use rayon::prelude::*;

use super::dictionary::{dot, Dictionary};
use crate::error::{Error, Result};
use crate::imaging::PatchMatrix;

// Squared norm below which an atom is treated as already inside the selected span.
const DEPENDENT_ATOM: f64 = 1e-10;

/// Sparse coefficients of one patch: parallel `indices` / `values`, in selection order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseCode {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseCode {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `D · code` written into `out`.
    pub fn reconstruct_into(&self, dict: &Dictionary, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&l, &a) in self.indices.iter().zip(&self.values) {
            for (o, d) in out.iter_mut().zip(dict.atom(l)) {
                *o += a * d;
            }
        }
    }

    pub fn reconstruct(&self, dict: &Dictionary) -> Vec<f64> {
        let mut out = vec![0.0; dict.dim()];
        self.reconstruct_into(dict, &mut out);
        out
    }
}

/// Orthogonal recursive matching pursuit over a fixed dictionary.
///
/// Each step selects the atom whose component orthogonal to the current
/// support has the largest normalized correlation with the residual. The
/// selected atoms are orthonormalized incrementally through the Gram matrix,
/// so a step costs `O(support · k)` after the initial `Dᵀy`.
pub struct Ormp<'a> {
    dict: &'a Dictionary,
    gram: Vec<f64>,
    epsilon: f64,
    max_atoms: usize,
}

impl<'a> Ormp<'a> {
    pub fn new(dict: &'a Dictionary, epsilon: f64, max_atoms: usize) -> Result<Self> {
        dict.check_normalized()?;
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter("epsilon must be >= 0".into()));
        }
        Ok(Self {
            dict,
            gram: dict.gram(),
            epsilon,
            max_atoms,
        })
    }

    pub fn code(&self, patch: &[f64]) -> Result<SparseCode> {
        let n = self.dict.dim();
        let k = self.dict.atom_count();
        if patch.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "patch of length {} for dictionary dimension {}",
                patch.len(),
                n
            )));
        }
        if patch.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }

        let eps2 = self.epsilon * self.epsilon;
        let limit = self.max_atoms.min(k);
        let mut residual2 = dot(patch, patch);
        let mut corr: Vec<f64> = (0..k).map(|j| dot(patch, self.dict.atom(j))).collect();
        let mut norm2 = vec![1.0; k];
        let mut support: Vec<usize> = Vec::with_capacity(limit);
        // Row t holds <u_t, d_j> for the orthonormalized selected atoms u_t.
        let mut proj: Vec<f64> = Vec::with_capacity(limit * k);
        let mut z: Vec<f64> = Vec::with_capacity(limit);

        while residual2 > eps2 && support.len() < limit {
            let mut best = None;
            let mut best_score = -1.0;
            for j in 0..k {
                // Selected atoms have norm2 ≈ 0 and are skipped here.
                if norm2[j] <= DEPENDENT_ATOM {
                    continue;
                }
                let score = corr[j] * corr[j] / norm2[j];
                if score > best_score {
                    best_score = score;
                    best = Some(j);
                }
            }
            let Some(s) = best else { break };
            let q = norm2[s].sqrt();
            let t = support.len();
            proj.extend_from_slice(&self.gram[s * k..(s + 1) * k]);
            let (prev, row) = proj.split_at_mut(t * k);
            for prev_row in prev.chunks_exact(k) {
                let ps = prev_row[s];
                for (r, p) in row.iter_mut().zip(prev_row) {
                    *r -= ps * p;
                }
            }
            let inv_q = 1.0 / q;
            let zt = corr[s] * inv_q;
            for ((r, c), nn) in row.iter_mut().zip(corr.iter_mut()).zip(norm2.iter_mut()) {
                *r *= inv_q;
                *c -= zt * *r;
                *nn -= *r * *r;
            }
            norm2[s] = 0.0;
            residual2 -= zt * zt;
            support.push(s);
            z.push(zt);
        }

        // D_S = U R with R[t][i] = <u_t, d_{s_i}> upper triangular; solve R a = z.
        let m = support.len();
        let mut values = vec![0.0; m];
        for i in (0..m).rev() {
            let row = &proj[i * k..(i + 1) * k];
            let mut acc = z[i];
            for (t, v) in values.iter().enumerate().skip(i + 1) {
                acc -= row[support[t]] * v;
            }
            values[i] = acc / row[support[i]];
        }

        // The Gram route squares the support's condition number. One step of
        // refinement on the true residual (corrected semi-normal equations)
        // brings the coefficients back to least-squares accuracy.
        if m > 1 {
            let mut r = patch.to_vec();
            for (&l, &v) in support.iter().zip(&values) {
                for (ri, di) in r.iter_mut().zip(self.dict.atom(l)) {
                    *ri -= v * di;
                }
            }
            let rt = |t: usize, i: usize| proj[t * k + support[i]];
            let mut w: Vec<f64> = support
                .iter()
                .map(|&l| dot(self.dict.atom(l), &r))
                .collect();
            for i in 0..m {
                let mut acc = w[i];
                for t in 0..i {
                    acc -= rt(t, i) * w[t];
                }
                w[i] = acc / rt(i, i);
            }
            for i in (0..m).rev() {
                let mut acc = w[i];
                for t in i + 1..m {
                    acc -= rt(i, t) * w[t];
                }
                w[i] = acc / rt(i, i);
                values[i] += w[i];
            }
        }
        Ok(SparseCode {
            indices: support,
            values,
        })
    }
}

/// Codes a single patch. Validates the dictionary on every call; prefer
/// [`Ormp`] or [`code_all`] for bulk work.
pub fn ormp(
    dict: &Dictionary,
    patch: &[f64],
    epsilon: f64,
    max_atoms: usize,
) -> Result<SparseCode> {
    Ormp::new(dict, epsilon, max_atoms)?.code(patch)
}

/// Codes every patch column in parallel; output order follows the patches.
pub fn code_all(
    dict: &Dictionary,
    patches: &PatchMatrix,
    epsilon: f64,
    max_atoms: usize,
) -> Result<Vec<SparseCode>> {
    if patches.dim() != dict.dim() {
        return Err(Error::DimensionMismatch(format!(
            "patches of dimension {} for dictionary dimension {}",
            patches.dim(),
            dict.dim()
        )));
    }
    let solver = Ormp::new(dict, epsilon, max_atoms)?;
    patches
        .columns()
        .par_chunks(patches.dim())
        .map(|col| solver.code(col))
        .collect()
}

/// Re-codes every patch against `dict`, keeping a patch's previous code when
/// the fresh ORMP code represents it worse.
///
/// Greedy pursuit is not optimal, so plain re-coding after a dictionary update
/// can undo the update's gain. Keeping the better code makes every
/// {code, update} round non-increasing in the learning objective.
pub fn recode_no_worse(
    dict: &Dictionary,
    patches: &PatchMatrix,
    epsilon: f64,
    max_atoms: usize,
    codes: &mut [SparseCode],
) -> Result<()> {
    if codes.len() != patches.count() {
        return Err(Error::DimensionMismatch(format!(
            "{} codes for {} patches",
            codes.len(),
            patches.count()
        )));
    }
    let fresh = code_all(dict, patches, epsilon, max_atoms)?;
    let n = patches.dim();
    codes
        .par_iter_mut()
        .zip(fresh)
        .zip(patches.columns().par_chunks(n))
        .for_each(|((old, new), col)| {
            if residual_norm2(&new, dict, col) <= residual_norm2(old, dict, col) {
                *old = new;
            }
        });
    Ok(())
}

fn residual_norm2(code: &SparseCode, dict: &Dictionary, patch: &[f64]) -> f64 {
    let rec = code.reconstruct(dict);
    rec.iter().zip(patch).map(|(r, p)| (r - p) * (r - p)).sum()
}
