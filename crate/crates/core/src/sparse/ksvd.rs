use rayon::prelude::*;

use super::dictionary::{dot, Dictionary};
use super::ormp::SparseCode;
use crate::error::{Error, Result};
use crate::imaging::PatchMatrix;

const POWER_ITERS: usize = 60;
const POWER_TOL: f64 = 1e-10;
// Fixed chunking keeps parallel sums independent of the thread count.
const REDUCE_CHUNK: usize = 2048;

/// Sum of squared patch approximation errors, `Σ ‖D αₚ − yₚ‖²`.
pub fn objective(patches: &PatchMatrix, dict: &Dictionary, codes: &[SparseCode]) -> f64 {
    let n = patches.dim();
    let parts: Vec<f64> = patches
        .columns()
        .par_chunks(n * REDUCE_CHUNK)
        .enumerate()
        .map(|(chunk, cols)| {
            let mut approx = vec![0.0; n];
            cols.chunks_exact(n)
                .enumerate()
                .map(|(i, y)| {
                    codes[chunk * REDUCE_CHUNK + i].reconstruct_into(dict, &mut approx);
                    y.iter()
                        .zip(&approx)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .sum()
        })
        .collect();
    parts.iter().sum()
}

fn residual_matrix(patches: &PatchMatrix, dict: &Dictionary, codes: &[SparseCode]) -> Vec<f64> {
    let n = patches.dim();
    let mut res = patches.columns().to_vec();
    res.par_chunks_mut(n).zip(codes).for_each(|(col, code)| {
        for (&l, &a) in code.indices.iter().zip(&code.values) {
            for (r, d) in col.iter_mut().zip(dict.atom(l)) {
                *r -= a * d;
            }
        }
    });
    res
}

/// One K-SVD dictionary sweep.
///
/// Atoms are revisited in index order. For each atom, the error of the
/// patches that use it (with the atom's own contribution added back) is
/// replaced by its best rank-1 approximation; the atom becomes the leading
/// left singular vector and the corresponding code values are rewritten in
/// `codes`. The singular pair is found by power iteration started from the
/// current atom, so the objective can never increase. An atom used by no
/// patch is replaced by the normalized patch with the largest current
/// approximation error (lowest index on ties, each patch used at most once
/// per sweep).
pub fn ksvd_iterate(
    patches: &PatchMatrix,
    dict: &Dictionary,
    codes: &mut [SparseCode],
) -> Result<Dictionary> {
    let n = patches.dim();
    let k = dict.atom_count();
    if n != dict.dim() {
        return Err(Error::DimensionMismatch(format!(
            "patches of dimension {} for dictionary dimension {}",
            n,
            dict.dim()
        )));
    }
    if codes.len() != patches.count() {
        return Err(Error::DimensionMismatch(format!(
            "{} codes for {} patches",
            codes.len(),
            patches.count()
        )));
    }
    let mut users: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (p, code) in codes.iter().enumerate() {
        for (slot, &l) in code.indices.iter().enumerate() {
            if l >= k {
                return Err(Error::DimensionMismatch(format!(
                    "code references atom {l} of {k}"
                )));
            }
            users[l].push((p, slot));
        }
    }

    let mut dict = dict.clone();
    let mut res = residual_matrix(patches, &dict, codes);
    let mut replaced = vec![false; patches.count()];

    for (l, members) in users.iter().enumerate() {
        if members.is_empty() {
            replace_unused(patches, &res, &mut replaced, dict.atom_mut(l));
            continue;
        }
        let old: Vec<f64> = dict.atom(l).to_vec();
        let err = AtomError {
            res: &res,
            n,
            members: members
                .iter()
                .map(|&(p, slot)| (p, codes[p].values[slot]))
                .collect(),
            old: &old,
        };
        let (atom, coeffs) = leading_left_vector(&err);
        let previous = err.members;

        for (&(p, slot), &c) in members.iter().zip(&coeffs) {
            codes[p].values[slot] = c;
        }
        member_columns(&mut res, n, &previous)
            .into_par_iter()
            .zip(previous.par_iter().zip(&coeffs))
            .for_each(|(r, (&(_, a), &c))| {
                for ((r, o), u) in r.iter_mut().zip(&old).zip(&atom) {
                    *r += a * o - c * u;
                }
            });
        dict.atom_mut(l).copy_from_slice(&atom);
    }
    Ok(dict)
}

// Disjoint mutable views of the residual columns of `members` (ascending patch order).
fn member_columns<'a>(
    res: &'a mut [f64],
    n: usize,
    members: &[(usize, f64)],
) -> Vec<&'a mut [f64]> {
    let mut cols = Vec::with_capacity(members.len());
    let mut rest = res;
    let mut next = 0;
    for &(p, _) in members {
        let tail = std::mem::take(&mut rest);
        let (_, tail) = tail.split_at_mut((p - next) * n);
        let (col, tail) = tail.split_at_mut(n);
        cols.push(col);
        rest = tail;
        next = p + 1;
    }
    cols
}

fn replace_unused(patches: &PatchMatrix, res: &[f64], replaced: &mut [bool], atom: &mut [f64]) {
    let n = patches.dim();
    let norms: Vec<f64> = res.par_chunks(n).map(|r| dot(r, r)).collect();
    let mut worst: Option<usize> = None;
    for (p, &e) in norms.iter().enumerate() {
        if replaced[p] {
            continue;
        }
        match worst {
            Some(w) if norms[w] >= e => {}
            _ => worst = Some(p),
        }
    }
    let Some(p) = worst else { return };
    let y = patches.column(p);
    let norm = dot(y, y).sqrt();
    if norm < 1e-12 {
        return;
    }
    replaced[p] = true;
    for (a, v) in atom.iter_mut().zip(y) {
        *a = v / norm;
    }
}

/// The restricted error matrix `E = [r_p + a_p·d]` over the patches that use
/// atom `d`, kept implicit: columns are formed on the fly from the residuals.
struct AtomError<'a> {
    res: &'a [f64],
    n: usize,
    /// (patch, current coefficient) in ascending patch order.
    members: Vec<(usize, f64)>,
    old: &'a [f64],
}

impl AtomError<'_> {
    fn residual(&self, p: usize) -> &[f64] {
        &self.res[p * self.n..(p + 1) * self.n]
    }

    /// `Eᵀu`.
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let du = dot(self.old, u);
        self.members
            .par_iter()
            .map(|&(p, a)| dot(self.residual(p), u) + a * du)
            .collect()
    }

    /// `E v`, summed in fixed chunks.
    fn combine(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let parts: Vec<(Vec<f64>, f64)> = self
            .members
            .par_chunks(REDUCE_CHUNK)
            .zip(v.par_chunks(REDUCE_CHUNK))
            .map(|(ms, vs)| {
                let mut acc = vec![0.0; n];
                let mut along_old = 0.0;
                for (&(p, a), &c) in ms.iter().zip(vs) {
                    for (s, r) in acc.iter_mut().zip(self.residual(p)) {
                        *s += c * r;
                    }
                    along_old += c * a;
                }
                (acc, along_old)
            })
            .collect();
        let mut total = vec![0.0; n];
        let mut along_old = 0.0;
        for (part, a) in parts {
            for (t, x) in total.iter_mut().zip(part) {
                *t += x;
            }
            along_old += a;
        }
        for (t, o) in total.iter_mut().zip(self.old) {
            *t += along_old * o;
        }
        total
    }

    fn column(&self, i: usize) -> Vec<f64> {
        let (p, a) = self.members[i];
        self.residual(p)
            .iter()
            .zip(self.old)
            .map(|(r, o)| r + a * o)
            .collect()
    }
}

/// Leading left singular vector `u` of `E` together with `Eᵀu`, by power
/// iteration on `E Eᵀ` started from the current atom. Steps that would lower
/// `‖Eᵀu‖` are rejected, so the returned pair never does worse than the start.
fn leading_left_vector(err: &AtomError) -> (Vec<f64>, Vec<f64>) {
    let mut u = err.old.to_vec();
    let mut v = err.project(&u);
    let mut energy = dot(&v, &v);
    if energy <= f64::MIN_POSITIVE {
        // Start orthogonal to every column: restart from the largest column.
        let best = (0..err.members.len())
            .map(|i| {
                let c = err.column(i);
                (i, dot(&c, &c))
            })
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best.1 <= f64::MIN_POSITIVE {
            return (u, v);
        }
        let norm = best.1.sqrt();
        u = err.column(best.0).iter().map(|x| x / norm).collect();
        v = err.project(&u);
        energy = dot(&v, &v);
    }
    for _ in 0..POWER_ITERS {
        let w = err.combine(&v);
        let norm = dot(&w, &w).sqrt();
        // ‖M u‖ ≥ uᵀM u with equality exactly at an eigenvector.
        if norm <= f64::MIN_POSITIVE || norm <= (1.0 + POWER_TOL) * energy {
            break;
        }
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let next_v = err.project(&next);
        let next_energy = dot(&next_v, &next_v);
        if next_energy < energy {
            break;
        }
        u = next;
        v = next_v;
        energy = next_energy;
    }
    (u, v)
}
