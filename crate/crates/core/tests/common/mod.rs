//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use vectorix::linalg::{CMatrix, Permutation, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Householder QR `A = Q R` with a real, positive diagonal in `R`.
pub fn householder_qr(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let mut r: Vec<Vec<C64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut q: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect();
    for k in 0..n {
        let x: Vec<C64> = (k..n).map(|i| r[i][k]).collect();
        let norm_x = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { c(1.0, 0.0) } else { x[0] / x[0].norm() };
        let alpha = -phase * norm_x;
        let mut v = x.clone();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vv == 0.0 {
            continue;
        }
        // R <- (I - 2 v vᴴ / vᴴv) R on rows k..n
        for j in 0..n {
            let dot: C64 = (k..n).map(|i| v[i - k].conj() * r[i][j]).sum();
            for i in k..n {
                r[i][j] -= v[i - k] * dot * (2.0 / vv);
            }
        }
        // Q <- Q (I - 2 v vᴴ / vᴴv) on columns k..n
        for row in q.iter_mut() {
            let dot: C64 = (k..n).map(|j| row[j] * v[j - k]).sum();
            for j in k..n {
                row[j] -= dot * v[j - k].conj() * (2.0 / vv);
            }
        }
    }
    // make diag(R) real positive
    for k in 0..n {
        let d = r[k][k];
        if d.norm() == 0.0 {
            continue;
        }
        let ph = d / d.norm();
        for j in 0..n {
            r[k][j] *= ph.conj();
        }
        for row in q.iter_mut() {
            row[k] *= ph;
        }
        r[k][k] = c(r[k][k].re, 0.0);
    }
    for i in 0..n {
        for j in 0..i {
            r[i][j] = c(0.0, 0.0);
        }
    }
    (CMatrix::from_rows(&q).unwrap(), CMatrix::from_rows(&r).unwrap())
}

/// Cofactor-expansion determinant (small matrices only).
pub fn cofactor_det(a: &[Vec<C64>]) -> C64 {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    let mut total = c(0.0, 0.0);
    for j in 0..n {
        let minor: Vec<Vec<C64>> = a[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, v)| *v).collect())
            .collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += a[0][j] * cofactor_det(&minor) * sign;
    }
    total
}

pub fn rows_of(a: &CMatrix) -> Vec<Vec<C64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

/// Columns of `a` in the order `perm` (column k of the result is column
/// `perm[k]` of `a`).
pub fn columns_in_order(a: &CMatrix, perm: &Permutation) -> CMatrix {
    CMatrix::from_fn(a.rows(), a.cols(), |i, k| a[(i, perm[k])])
}

/// Centered modulo written from its definition: subtract the nearest
/// multiple of `tau` on each axis so the result lies in `[-tau/2, tau/2)`.
pub fn centered_mod(x: C64, tau: f64) -> C64 {
    let f = |v: f64| v - tau * ((v + tau / 2.0) / tau).floor();
    c(f(x.re), f(x.im))
}

/// Successive pre-cancellation in processing order: stream `k` sends
/// `mod(a_{π(k)} - Σ_{j<k} b_kj x̃_j)`, and `x = F x̃`.
pub fn thp_loop(b: &CMatrix, f: &CMatrix, perm: &Permutation, tau: &[f64], a: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut xt = vec![c(0.0, 0.0); n];
    for k in 0..n {
        let mut u = a[perm[k]];
        for j in 0..k {
            u -= b[(k, j)] * xt[j];
        }
        xt[k] = centered_mod(u, tau[k]);
    }
    f.mul_vec(&xt)
}
