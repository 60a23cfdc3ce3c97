//! Modified Gram-Schmidt QR with selectable column ordering.
//!
//! All variants share one MGS kernel: the only difference between them is
//! which remaining column is taken at each step. Because of that, forcing
//! the order found by [`sorted_qr`] reproduces its factors bit for bit.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::matrix::{CMatrix, GaussianIntMatrix, Permutation, C64, ZERO};
use crate::error::{Error, Result};

/// `A · T · P = Q · R`, where `P` is the column permutation `perm` and `T`
/// the optional unimodular lattice-reduction transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrFactorization {
    pub q: CMatrix,
    pub r: CMatrix,
    pub perm: Permutation,
    pub lr_transform: Option<GaussianIntMatrix>,
}

impl QrFactorization {
    pub fn dim(&self) -> usize {
        self.r.rows()
    }

    /// Diagonal of `R` (real, non-negative).
    pub fn r_diag(&self) -> Vec<f64> {
        self.r.diag().iter().map(|z| z.re).collect()
    }

    pub fn r_diag_sqr(&self) -> Vec<f64> {
        self.r_diag().iter().map(|r| r * r).collect()
    }

    pub fn min_r_sqr(&self) -> f64 {
        self.r_diag_sqr().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `Q · R · Pᵀ`, which equals `A · T` (or `A` without lattice reduction).
    pub fn reconstruct(&self) -> CMatrix {
        let qr = &self.q * &self.r;
        &qr * &self.perm.matrix().adjoint()
    }

    /// Relative Frobenius error of the reconstruction against `a`.
    pub fn reconstruction_error(&self, a: &CMatrix) -> f64 {
        let target = match &self.lr_transform {
            Some(t) => a * &t.to_cmatrix(),
            None => a.clone(),
        };
        self.reconstruct().sub(&target).frobenius_norm() / a.frobenius_norm()
    }

    /// `‖QᴴQ − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        (&self.q.adjoint() * &self.q).max_abs_diff(&CMatrix::identity(self.dim()))
    }
}

#[derive(Clone, Copy)]
enum Selection<'a> {
    Forced(&'a Permutation),
    /// Smallest residual first (V-BLAST, "weakest first").
    Min,
    /// Largest residual first (column pivoting, "strongest first").
    Max,
}

/// Plain MGS QR in natural column order.
pub fn gram_schmidt_qr(a: &CMatrix) -> Result<QrFactorization> {
    mgs(a, Selection::Forced(&Permutation::identity(a.cols())))
}

/// Sorted QR: at every step the remaining column with the smallest residual
/// norm is orthogonalized next. Ties go to the lowest column index.
pub fn sorted_qr(a: &CMatrix) -> Result<QrFactorization> {
    mgs(a, Selection::Min)
}

/// QR with column pivoting: the largest residual norm is taken first.
pub fn pivoted_qr(a: &CMatrix) -> Result<QrFactorization> {
    mgs(a, Selection::Max)
}

/// MGS QR consuming columns exactly in the order given by `pi`.
pub fn forced_order_qr(a: &CMatrix, pi: &Permutation) -> Result<QrFactorization> {
    if pi.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("permutation of length {}", a.cols()),
            got: format!("length {}", pi.len()),
        });
    }
    mgs(a, Selection::Forced(pi))
}

/// Largest dimension accepted by [`exhaustive_maxmin_order`].
pub const EXHAUSTIVE_MAX_DIM: usize = 8;

/// Brute-force search over all `L!` processing orders for the one that
/// maximizes `min_i r_ii²`. Ties resolve to the lexicographically smallest
/// order.
pub fn exhaustive_maxmin_order(a: &CMatrix) -> Result<Permutation> {
    let n = a.cols();
    if n > EXHAUSTIVE_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: EXHAUSTIVE_MAX_DIM,
        });
    }
    let mut best: Option<(f64, Permutation)> = None;
    for order in (0..n).permutations(n) {
        let pi = Permutation::new(order)?;
        let value = forced_order_qr(a, &pi)?.min_r_sqr();
        if best.as_ref().map_or(true, |(b, _)| value > *b) {
            best = Some((value, pi));
        }
    }
    Ok(best.expect("at least one permutation").1)
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn mgs(a: &CMatrix, selection: Selection<'_>) -> Result<QrFactorization> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    let n = a.cols();
    let threshold = 1e-12 * a.frobenius_norm();
    let mut residual: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut remaining: Vec<usize> = (0..n).collect();
    // coef[i][m] = <residual of physical column m, q_i> at step i
    let mut coef = vec![vec![ZERO; n]; n];
    let mut q = CMatrix::zeros(n, n);
    let mut order = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);

    for step in 0..n {
        let chosen = match selection {
            Selection::Forced(pi) => {
                let p = pi[step];
                if !remaining.contains(&p) {
                    return Err(Error::InvalidPermutation(format!("{pi} repeats column {p}")));
                }
                p
            }
            Selection::Min | Selection::Max => {
                let mut best = remaining[0];
                let mut best_norm = norm(&residual[best]);
                for &m in &remaining[1..] {
                    let v = norm(&residual[m]);
                    let better = match selection {
                        Selection::Min => v < best_norm,
                        _ => v > best_norm,
                    };
                    if better {
                        best = m;
                        best_norm = v;
                    }
                }
                best
            }
        };
        // second projection pass keeps Q unitary to working precision on
        // ill-conditioned inputs
        for p in 0..step {
            let q_p = q.column(p);
            let c: C64 = q_p.iter().zip(&residual[chosen]).map(|(qv, hv)| qv.conj() * hv).sum();
            coef[p][chosen] += c;
            for (h, qv) in residual[chosen].iter_mut().zip(&q_p) {
                *h -= c * qv;
            }
        }
        let r_ii = norm(&residual[chosen]);
        if !(r_ii >= threshold) || r_ii == 0.0 {
            return Err(Error::SingularMatrix {
                step,
                residual: r_ii,
                threshold,
            });
        }
        remaining.retain(|&m| m != chosen);
        let q_i: Vec<C64> = residual[chosen].iter().map(|z| z / r_ii).collect();
        for &m in &remaining {
            let c: C64 = q_i.iter().zip(&residual[m]).map(|(qv, hv)| qv.conj() * hv).sum();
            coef[step][m] = c;
            for (h, qv) in residual[m].iter_mut().zip(&q_i) {
                *h -= c * qv;
            }
        }
        q.set_column(step, &q_i);
        order.push(chosen);
        diag.push(r_ii);
    }

    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = C64::new(diag[i], 0.0);
        for k in (i + 1)..n {
            r[(i, k)] = coef[i][order[k]];
        }
    }
    Ok(QrFactorization {
        q,
        r,
        perm: Permutation::new(order)?,
        lr_transform: None,
    })
}
