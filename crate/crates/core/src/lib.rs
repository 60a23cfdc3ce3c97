//! Multi-line downstream precoding for DMT crosstalk channels: QR and
//! lattice-reduction kernels, Tomlinson-Harashima and linear precoders,
//! per-tone ordering strategies, gap-formula bit loading and a symbol-level
//! link simulator.

pub mod bitloading;
pub mod channel;
pub mod commands;
pub mod config;
pub mod error;
pub mod linalg;
pub mod linksim;
pub mod ordering;
pub mod precoding;
pub mod rng;

pub use error::{Error, Result};
