//! Complex dense linear algebra: matrices, ordered QR variants and lattice
//! reduction.

pub mod lll;
pub mod matrix;
pub mod qr;

pub use lll::{lll_condition_excess, lll_qr, lll_reduce, LllReduction};
pub use matrix::{CMatrix, GaussInt, GaussianIntMatrix, Permutation, C64};
pub use qr::{
    exhaustive_maxmin_order, forced_order_qr, gram_schmidt_qr, pivoted_qr, sorted_qr, QrFactorization,
};
