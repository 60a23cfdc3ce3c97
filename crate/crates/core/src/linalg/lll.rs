//! Complex LLL lattice reduction over Gaussian integers.
//!
//! The basis vectors are the columns of the input. Reduction runs on the
//! `R` factor of a QR decomposition, with size reduction against every
//! earlier column followed by the Lovász test; a swap is repaired with a
//! single complex Givens rotation.

use super::matrix::{CMatrix, GaussInt, GaussianIntMatrix, C64};
use super::qr::{gram_schmidt_qr, sorted_qr, QrFactorization};
use crate::error::{Error, Result};

/// Swap budget per unit of `L²`.
pub const SWAP_CAP_FACTOR: usize = 64;

/// Result of a lattice reduction: `reduced = A · transform`.
#[derive(Debug, Clone)]
pub struct LllReduction {
    pub transform: GaussianIntMatrix,
    pub reduced: CMatrix,
    pub swaps: usize,
}

fn round_gauss(z: C64) -> GaussInt {
    GaussInt::new(z.re.round() as i64, z.im.round() as i64)
}

fn to_c64(z: GaussInt) -> C64 {
    C64::new(z.re as f64, z.im as f64)
}

/// Reduce the column basis of `a` with Lovász parameter `delta ∈ (0.5, 1]`.
pub fn lll_reduce(a: &CMatrix, delta: f64) -> Result<LllReduction> {
    if !(delta > 0.5 && delta <= 1.0) {
        return Err(Error::invalid(format!("LLL delta {delta} outside (0.5, 1]")));
    }
    let n = a.cols();
    let mut r = gram_schmidt_qr(a)?.r;
    let mut t = GaussianIntMatrix::identity(n);
    let cap = SWAP_CAP_FACTOR * n * n;
    let mut swaps = 0;
    let mut k = 1;
    while k < n {
        for l in (0..k).rev() {
            let mu = round_gauss(r[(l, k)] / r[(l, l)]);
            if mu == GaussInt::new(0, 0) {
                continue;
            }
            let muc = to_c64(mu);
            for i in 0..=l {
                let v = r[(i, l)];
                r[(i, k)] -= muc * v;
            }
            t.sub_column_multiple(k, l, mu);
        }

        let lhs = delta * r[(k - 1, k - 1)].norm_sqr();
        let rhs = r[(k, k)].norm_sqr() + r[(k - 1, k)].norm_sqr();
        // relative slack keeps delta = 1 from cycling on rounding noise
        if lhs > rhs * (1.0 + 1e-12) {
            swaps += 1;
            if swaps > cap {
                return Err(Error::LllNoConvergence { swaps: cap });
            }
            swap_and_retriangularize(&mut r, k);
            t.swap_columns(k - 1, k);
            k = (k - 1).max(1);
        } else {
            k += 1;
        }
    }
    let reduced = a * &t.to_cmatrix();
    Ok(LllReduction {
        transform: t,
        reduced,
        swaps,
    })
}

fn swap_and_retriangularize(r: &mut CMatrix, k: usize) {
    let n = r.cols();
    for i in 0..n {
        let tmp = r[(i, k - 1)];
        r[(i, k - 1)] = r[(i, k)];
        r[(i, k)] = tmp;
    }
    let a = r[(k - 1, k - 1)];
    let b = r[(k, k - 1)];
    let nrm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (c, s) = (a / nrm, b / nrm);
    for j in (k - 1)..n {
        let (top, bottom) = (r[(k - 1, j)], r[(k, j)]);
        r[(k - 1, j)] = c.conj() * top + s.conj() * bottom;
        r[(k, j)] = -s * top + c * bottom;
    }
    r[(k, k - 1)] = C64::new(0.0, 0.0);
    r[(k - 1, k - 1)] = C64::new(r[(k - 1, k - 1)].re, 0.0);
    // keep the diagonal real and non-negative
    let d = r[(k, k)];
    if d.norm() > 0.0 {
        let phase = d.conj() / d.norm();
        for j in k..n {
            r[(k, j)] *= phase;
        }
        r[(k, k)] = C64::new(r[(k, k)].re, 0.0);
    }
}

/// QR factorization of the LLL-reduced basis, optionally sorted
/// ("weakest first") after the reduction.
pub fn lll_qr(a: &CMatrix, delta: f64, sort: bool) -> Result<QrFactorization> {
    let red = lll_reduce(a, delta)?;
    let mut f = if sort {
        sorted_qr(&red.reduced)?
    } else {
        gram_schmidt_qr(&red.reduced)?
    };
    f.lr_transform = Some(red.transform);
    Ok(f)
}

/// Largest violation of the size-reduction and Lovász conditions on the
/// `R` factor of `basis`, returned as `(size_excess, lovasz_excess)`;
/// both are `<= 0` for a reduced basis.
pub fn lll_condition_excess(basis: &CMatrix, delta: f64) -> Result<(f64, f64)> {
    let r = gram_schmidt_qr(basis)?.r;
    let n = r.cols();
    let mut size = f64::NEG_INFINITY;
    let mut lovasz = f64::NEG_INFINITY;
    for k in 1..n {
        for l in 0..k {
            let mu = r[(l, k)] / r[(l, l)];
            size = size.max(mu.re.abs() - 0.5).max(mu.im.abs() - 0.5);
        }
        let lhs = delta * r[(k - 1, k - 1)].norm_sqr();
        let rhs = r[(k, k)].norm_sqr() + r[(k - 1, k)].norm_sqr();
        lovasz = lovasz.max((lhs - rhs) / rhs);
    }
    Ok((size, lovasz))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_identity_is_untouched() {
        let red = lll_reduce(&CMatrix::identity(4), 0.75).unwrap();
        assert!(red.transform.is_identity());
        assert_eq!(red.swaps, 0);
    }

    #[test]
    fn rejects_delta_out_of_range() {
        assert!(lll_reduce(&CMatrix::identity(2), 0.5).is_err());
        assert!(lll_reduce(&CMatrix::identity(2), 1.01).is_err());
    }

    #[test]
    fn ill_conditioned_basis_improves() {
        let a = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.99, 0.01]]).unwrap();
        let red = lll_reduce(&a, 0.75).unwrap();
        assert!(red.transform.is_unimodular());
        let cond = |m: &CMatrix| m.frobenius_norm() * m.inverse().unwrap().frobenius_norm();
        assert!(cond(&red.reduced) < cond(&a), "{} vs {}", cond(&red.reduced), cond(&a));
        let (size, lovasz) = lll_condition_excess(&red.reduced, 0.75).unwrap();
        assert!(size <= 1e-9 && lovasz <= 1e-9);
    }

    #[test]
    fn lll_qr_reconstructs() {
        let a = CMatrix::from_rows(&[
            vec![C64::new(1.0, 0.2), C64::new(0.9, 0.1)],
            vec![C64::new(0.3, -0.4), C64::new(0.35, -0.38)],
        ])
        .unwrap();
        for sort in [false, true] {
            let f = lll_qr(&a, 1.0, sort).unwrap();
            assert!(f.reconstruction_error(&a) < 1e-12);
            assert!(f.lr_transform.as_ref().unwrap().is_unimodular());
        }
    }
}
