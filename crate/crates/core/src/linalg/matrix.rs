//! Dense complex matrices, permutations and Gaussian-integer matrices.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
///
/// Every constructor that accepts external data rejects NaN and infinite
/// entries, so downstream code may assume finiteness.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(r, c, rows.concat())
    }

    /// Convenience constructor for real-valued matrices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        debug_assert_eq!(col.len(), self.rows);
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn row_norm_sqr(&self, i: usize) -> f64 {
        self.row(i).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self[(i, j)].norm_sqr()).sum::<f64>().sqrt()
    }

    /// Columns reordered so that column `k` of the result is column
    /// `perm[k]` of `self` (i.e. `self · P` in the permutation-matrix view).
    pub fn permute_columns(&self, perm: &Permutation) -> Self {
        assert_eq!(perm.len(), self.cols);
        Self::from_fn(self.rows, self.cols, |i, k| self[(i, perm[k])])
    }

    pub fn is_lower_triangular(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| ((i + 1)..self.cols).all(|j| self[(i, j)].norm() <= tol))
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self[(i, j)].norm() <= tol))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.is_lower_triangular(tol) && self.is_upper_triangular(tol)
    }

    fn require_square(&self) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                got: format!("{}x{}", self.rows, self.cols),
            });
        }
        Ok(self.rows)
    }

    /// Inverse via Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.require_square()?;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let threshold = 1e-14 * self.frobenius_norm().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let (pivot, best) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= threshold {
                return Err(Error::SingularMatrix {
                    step: col,
                    residual: best,
                    threshold,
                });
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let p = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= p;
                inv[(col, j)] *= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= factor * ac;
                    inv[(r, j)] -= factor * ic;
                }
            }
        }
        Ok(inv)
    }

    /// Determinant via LU with partial pivoting.
    pub fn determinant(&self) -> Result<C64> {
        let n = self.require_square()?;
        let mut a = self.clone();
        let mut det = ONE;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
                .unwrap();
            if a[(pivot, col)] == ZERO {
                return Ok(ZERO);
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for r in (col + 1)..n {
                let f = a[(r, col)] / p;
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= f * v;
                }
            }
        }
        Ok(det)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>10.4}{:+.4}j ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Processing order of lines: `order[k]` is the physical line handled k-th
/// (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty".into()));
        }
        let mut seen = vec![false; n];
        for &p in &order {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidPermutation(format!("{order:?} is not a bijection on 0..{n}")));
            }
        }
        Ok(Self { order })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(k, &p)| k == p)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    /// `inverse()[line]` is the processing position of `line`.
    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.order.len()];
        for (k, &p) in self.order.iter().enumerate() {
            inv[p] = k;
        }
        Self { order: inv }
    }

    pub fn position_of(&self, line: usize) -> usize {
        self.order.iter().position(|&p| p == line).expect("line out of range")
    }

    /// Permutation matrix `P` with `P[order[k], k] = 1`, so that
    /// `A · P` reorders the columns of `A` into processing order.
    pub fn matrix(&self) -> CMatrix {
        let n = self.order.len();
        let mut m = CMatrix::zeros(n, n);
        for (k, &p) in self.order.iter().enumerate() {
            m[(p, k)] = ONE;
        }
        m
    }

    /// `out[k] = v[order[k]]`.
    pub fn gather<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.order.iter().map(|&p| v[p]).collect()
    }

    /// Inverse of [`gather`](Self::gather): `out[order[k]] = v[k]`.
    pub fn scatter<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); v.len()];
        for (k, &p) in self.order.iter().enumerate() {
            out[p] = v[k];
        }
        out
    }
}

impl Index<usize> for Permutation {
    type Output = usize;

    fn index(&self, k: usize) -> &usize {
        &self.order[k]
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.order.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", s.join(" "))
    }
}

pub type GaussInt = Complex<i64>;

/// Square matrix of Gaussian integers, used for unimodular basis changes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussianIntMatrix {
    n: usize,
    data: Vec<GaussInt>,
}

impl GaussianIntMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![GaussInt::new(0, 0); n * n];
        for i in 0..n {
            data[i * n + i] = GaussInt::new(1, 0);
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<GaussInt>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("Gaussian-integer matrix must be square and nonempty"));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| {
            let z = self[(i, j)];
            C64::new(z.re as f64, z.im as f64)
        })
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::identity(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    /// Column operation `col[k] -= mu * col[l]`.
    pub fn sub_column_multiple(&mut self, k: usize, l: usize, mu: GaussInt) {
        for i in 0..self.n {
            let v = self[(i, l)];
            self[(i, k)] -= mu * v;
        }
    }

    pub fn swap_columns(&mut self, a: usize, b: usize) {
        for i in 0..self.n {
            self.data.swap(i * self.n + a, i * self.n + b);
        }
    }

    pub fn permute_columns(&self, perm: &Permutation) -> Self {
        let n = self.n;
        let mut out = self.clone();
        for i in 0..n {
            for k in 0..n {
                out[(i, k)] = self[(i, perm[k])];
            }
        }
        out
    }

    /// Exact determinant by fraction-free (Bareiss) elimination over Z[j].
    pub fn determinant(&self) -> Complex<i128> {
        let n = self.n;
        let mut a: Vec<Complex<i128>> = self
            .data
            .iter()
            .map(|z| Complex::new(z.re as i128, z.im as i128))
            .collect();
        let zero = Complex::new(0i128, 0);
        let mut sign = 1i128;
        let mut prev = Complex::new(1i128, 0);
        for k in 0..n.saturating_sub(1) {
            if a[k * n + k] == zero {
                let Some(r) = ((k + 1)..n).find(|&r| a[r * n + k] != zero) else {
                    return zero;
                };
                for j in 0..n {
                    a.swap(k * n + j, r * n + j);
                }
                sign = -sign;
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                for j in (k + 1)..n {
                    let num = a[i * n + j] * pivot - a[i * n + k] * a[k * n + j];
                    a[i * n + j] = gauss_exact_div(num, prev);
                }
                a[i * n + k] = zero;
            }
            prev = pivot;
        }
        a[n * n - 1] * sign
    }

    pub fn is_unimodular(&self) -> bool {
        self.determinant().norm_sqr() == 1
    }
}

fn gauss_exact_div(num: Complex<i128>, den: Complex<i128>) -> Complex<i128> {
    let d = den.norm_sqr();
    let p = num * den.conj();
    debug_assert!(p.re % d == 0 && p.im % d == 0, "inexact Gaussian division");
    Complex::new(p.re / d, p.im / d)
}

impl Index<(usize, usize)> for GaussianIntMatrix {
    type Output = GaussInt;

    fn index(&self, (i, j): (usize, usize)) -> &GaussInt {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for GaussianIntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut GaussInt {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = CMatrix::new(1, 2, vec![ONE, c(f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn inverse_of_small_matrix() {
        let a = CMatrix::from_rows(&[vec![c(2.0, 1.0), c(0.5, 0.0)], vec![c(0.0, -1.0), c(1.0, 1.0)]]).unwrap();
        let inv = a.inverse().unwrap();
        assert!((&a * &inv).max_abs_diff(&CMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn singular_inverse_is_an_error() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(a.inverse(), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn determinant_matches_hand_value() {
        let a = CMatrix::from_rows(&[vec![c(1.0, 1.0), c(2.0, 0.0)], vec![c(0.0, 1.0), c(3.0, -1.0)]]).unwrap();
        // (1+j)(3-j) - 2j = 4 + 2j - 2j
        let d = a.determinant().unwrap();
        assert!((d - c(4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn permutation_validation_and_inverse() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let inv = p.inverse();
        assert_eq!(inv.as_slice(), &[1, 2, 0]);
        assert_eq!(p.position_of(2), 0);
        let v = [10, 20, 30];
        assert_eq!(p.scatter(&p.gather(&v)), v.to_vec());
        let pm = p.matrix();
        assert!((&pm * &pm.adjoint()).max_abs_diff(&CMatrix::identity(3)) == 0.0);
    }

    #[test]
    fn permute_columns_matches_matrix_product() {
        let a = CMatrix::from_fn(3, 3, |i, j| c(i as f64, j as f64 * 2.0));
        let p = Permutation::new(vec![1, 2, 0]).unwrap();
        assert_eq!(a.permute_columns(&p), &a * &p.matrix());
    }

    #[test]
    fn gaussian_determinant_exact() {
        let g = |a, b| GaussInt::new(a, b);
        let t = GaussianIntMatrix::from_rows(&[
            vec![g(1, 0), g(2, 1), g(0, 0)],
            vec![g(0, 0), g(1, 0), g(0, 0)],
            vec![g(3, -2), g(0, 5), g(0, 1)],
        ])
        .unwrap();
        assert_eq!(t.determinant(), Complex::new(0, 1));
        assert!(t.is_unimodular());
        let s = GaussianIntMatrix::from_rows(&[vec![g(2, 0), g(0, 0)], vec![g(0, 0), g(1, 0)]]).unwrap();
        assert!(!s.is_unimodular());
    }
}
