//! Precoder construction for the diagonal, THP and equal-rate THP families,
//! the modulo feedback chain, and per-line SNR.
//!
//! Every scheme is described by the same linear blocks around the modulo
//! feedback loop: data `a` passes through `E`, the loop
//! `x̃_k = Γ_τk[(E a)_k − Σ_{j<k} B_kj x̃_j]`, the feedforward filter `F`, the
//! channel `H`, and per-receiver scaling `G` followed by the receiver modulo
//! with thresholds `τ̃`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{forced_order_qr, gram_schmidt_qr, lll_qr, CMatrix, Permutation, QrFactorization, C64};
use crate::ordering::OrderingStrategy;

/// Largest bit load handled by the threshold tables.
pub const MAX_BITS: u8 = 12;

/// Threshold used for lines that carry no data.
pub const IDLE_BITS: u8 = 2;

/// `Γ_τ[x]`: reduce real and imaginary parts into `[−τ/2, τ/2)`.
pub fn modulo_reduce(x: C64, tau: f64) -> C64 {
    C64::new(modulo_real(x.re, tau), modulo_real(x.im, tau))
}

fn modulo_real(v: f64, tau: f64) -> f64 {
    let mut r = (v + tau / 2.0).rem_euclid(tau);
    if r >= tau {
        r -= tau;
    }
    r - tau / 2.0
}

/// Size of the square grid used for a `bits`-bit constellation: `2^b` for
/// even `b`, `2^(b+1)` for odd `b`.
pub fn grid_points(bits: u8) -> Result<u32> {
    if !(1..=MAX_BITS).contains(&bits) {
        return Err(Error::invalid(format!("bit load {bits} outside 1..={MAX_BITS}")));
    }
    Ok(1u32 << (bits + bits % 2))
}

/// Modulo threshold `τ = √M′ · d_min(M′)` of the unit-energy square grid.
pub fn tau_for_bits(bits: u8) -> Result<f64> {
    let m = grid_points(bits)? as f64;
    Ok((6.0 * m / (m - 1.0)).sqrt())
}

/// Energy increase caused by the modulo, `M′/(M′−1)`, as a linear factor.
pub fn delta_e_linear(bits: u8) -> Result<f64> {
    let m = grid_points(bits)? as f64;
    Ok(m / (m - 1.0))
}

pub fn delta_e_for_bits(bits: u8) -> Result<f64> {
    Ok(10.0 * delta_e_linear(bits)?.log10())
}

fn threshold_or_idle(bits: u8) -> f64 {
    tau_for_bits(if bits == 0 { IDLE_BITS } else { bits }).expect("validated bit load")
}

/// Lattice-reduction settings for the equal-rate family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeReduction {
    pub delta: f64,
    /// Sort ("weakest first") the reduced basis.
    pub with_vb: bool,
}

/// The precoding schemes compared in the rate tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SchemeId {
    /// Linear diagonal precoding.
    Dp,
    /// THP in natural line order.
    Thp,
    /// Ordered THP with a per-tone ordering strategy.
    ThpOrdered(OrderingStrategy),
    /// Equal-rate THP with a per-tone ordering.
    ErThp(OrderingStrategy),
    ErThpLr { delta: f64 },
    ErThpLrVb { delta: f64 },
}

impl SchemeId {
    /// The nine schemes of the standard comparison table, in display order.
    pub fn standard_set() -> Vec<SchemeId> {
        vec![
            SchemeId::Dp,
            SchemeId::Thp,
            SchemeId::ThpOrdered(OrderingStrategy::Vb),
            SchemeId::ThpOrdered(OrderingStrategy::Ivb),
            SchemeId::ThpOrdered(OrderingStrategy::Do),
            SchemeId::ErThp(OrderingStrategy::Identity),
            SchemeId::ErThp(OrderingStrategy::Vb),
            SchemeId::ErThpLr { delta: 0.75 },
            SchemeId::ErThpLrVb { delta: 1.0 },
        ]
    }

    pub fn parse(label: &str) -> Result<Self> {
        let up = label.trim().to_ascii_uppercase();
        let scheme = match up.as_str() {
            "DP" => SchemeId::Dp,
            "THP" => SchemeId::Thp,
            "ER-THP" => SchemeId::ErThp(OrderingStrategy::Identity),
            "ER-THP-VB" => SchemeId::ErThp(OrderingStrategy::Vb),
            "ER-THP-IVB" => SchemeId::ErThp(OrderingStrategy::Ivb),
            "ER-THP-LR" => SchemeId::ErThpLr { delta: 0.75 },
            "ER-THP-LRVB" => SchemeId::ErThpLrVb { delta: 1.0 },
            _ => match up.strip_prefix("THP-") {
                Some(rest) => SchemeId::ThpOrdered(OrderingStrategy::parse(rest)?),
                None => return Err(Error::InvalidScheme(format!("unknown scheme `{label}`"))),
            },
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn label(&self) -> String {
        match self {
            SchemeId::Dp => "DP".into(),
            SchemeId::Thp => "THP".into(),
            SchemeId::ThpOrdered(s) => format!("THP-{}", s.label()),
            SchemeId::ErThp(OrderingStrategy::Identity) => "ER-THP".into(),
            SchemeId::ErThp(s) => format!("ER-THP-{}", s.label()),
            SchemeId::ErThpLr { .. } => "ER-THP-LR".into(),
            SchemeId::ErThpLrVb { .. } => "ER-THP-LRVB".into(),
        }
    }

    pub fn structure(&self) -> Structure {
        match self {
            SchemeId::Dp => Structure::Linear,
            SchemeId::Thp | SchemeId::ThpOrdered(_) => Structure::Thp,
            _ => Structure::EqualRate,
        }
    }

    pub fn is_equal_rate(&self) -> bool {
        self.structure() == Structure::EqualRate
    }

    /// Ordering strategy driving the per-tone permutation, if any.
    pub fn strategy(&self) -> OrderingStrategy {
        match self {
            SchemeId::ThpOrdered(s) | SchemeId::ErThp(s) => s.clone(),
            SchemeId::ErThpLrVb { .. } => OrderingStrategy::Vb,
            _ => OrderingStrategy::Identity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SchemeId::ThpOrdered(s) => s.validate(),
            SchemeId::ErThp(s) => match s {
                OrderingStrategy::Identity | OrderingStrategy::Vb | OrderingStrategy::Ivb => Ok(()),
                other => Err(Error::InvalidScheme(format!(
                    "equal-rate THP has identical line rates; `{}` ordering does not apply",
                    other.label()
                ))),
            },
            SchemeId::ErThpLr { delta } | SchemeId::ErThpLrVb { delta } => {
                if *delta > 0.5 && *delta <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidScheme(format!("LLL delta {delta} outside (0.5, 1]")))
                }
            }
            _ => Ok(()),
        }
    }
}

/// Shape of the precoding chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    /// No feedback and no modulo.
    Linear,
    /// Per-line thresholds, diagonal receiver scaling.
    Thp,
    /// One threshold and one gain shared by all lines.
    EqualRate,
}

/// The `(E, B, F, G, τ, τ̃, g)` blocks of one scheme on one tone.
///
/// `tau[k]` belongs to the k-th processed stream, `tau_tilde[i]` to receiver
/// `i`. Thresholds start at the 4-QAM value and are set from a bit
/// allocation with [`assign_bits`](Self::assign_bits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecoderBlocks {
    pub structure: Structure,
    pub e: CMatrix,
    pub b: CMatrix,
    pub f: CMatrix,
    pub g: CMatrix,
    pub tau: Vec<f64>,
    pub tau_tilde: Vec<f64>,
    pub gain: f64,
    /// Processing order when `E` is a pure permutation.
    pub order: Option<Permutation>,
    /// Streams whose line carries no bits; they send nothing instead of
    /// pre-cancelling interference toward a receiver that decodes nothing.
    pub muted: Vec<bool>,
}

impl PrecoderBlocks {
    pub fn lines(&self) -> usize {
        self.b.rows()
    }

    /// Set `τ` and `τ̃` for a per-line bit allocation (indexed by physical
    /// line). Lines with zero bits keep the 4-QAM threshold.
    pub fn assign_bits(&mut self, bits: &[u8]) -> Result<()> {
        let l = self.lines();
        if bits.len() != l {
            return Err(Error::DimensionMismatch {
                expected: format!("{l} bit loads"),
                got: format!("{}", bits.len()),
            });
        }
        if let Some(&b) = bits.iter().find(|&&b| b > MAX_BITS) {
            return Err(Error::invalid(format!("bit load {b} above {MAX_BITS}")));
        }
        match self.structure {
            Structure::Linear => {
                self.muted = bits.iter().map(|&b| b == 0).collect();
            }
            Structure::EqualRate => {
                if bits.iter().any(|&b| b != bits[0]) {
                    return Err(Error::InvalidScheme(
                        "equal-rate schemes need the same bit load on every line".into(),
                    ));
                }
                let tau = threshold_or_idle(bits[0]);
                self.tau = vec![tau; l];
                self.tau_tilde = vec![tau; l];
                self.muted = vec![bits[0] == 0; l];
            }
            Structure::Thp => {
                let order = self.order.as_ref().expect("THP blocks carry their order");
                self.tau_tilde = bits.iter().map(|&b| threshold_or_idle(b)).collect();
                self.tau = order.gather(&self.tau_tilde);
                self.muted = order.gather(bits).iter().map(|&b| b == 0).collect();
            }
        }
        Ok(())
    }

    /// Largest per-line transmit power of the feedforward filter,
    /// `max_i Σ_j |f_ij|²`, assuming unit-power loop outputs.
    pub fn max_row_power(&self) -> f64 {
        (0..self.f.rows()).map(|i| self.f.row_norm_sqr(i)).fold(0.0, f64::max)
    }
}

/// Per-line output SNR (linear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrProfile {
    pub gamma: Vec<f64>,
    pub gamma_base: f64,
}

fn inv_diag(qr: &QrFactorization) -> CMatrix {
    CMatrix::from_real_diag(&qr.r_diag().iter().map(|r| 1.0 / r).collect::<Vec<_>>())
}

fn require_square(h: &CMatrix) -> Result<()> {
    if h.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: "square channel".into(),
            got: format!("{}x{}", h.rows(), h.cols()),
        })
    }
}

fn default_tau(l: usize) -> Vec<f64> {
    vec![threshold_or_idle(IDLE_BITS); l]
}

/// THP in natural order: `Hᴴ = QR`, `E = I`, `B = diag(R)⁻¹Rᴴ`, `F = Q`,
/// `G = diag(R)⁻¹`.
pub fn build_reference_thp(h: &CMatrix) -> Result<PrecoderBlocks> {
    require_square(h)?;
    let qr = gram_schmidt_qr(&h.adjoint())?;
    let l = h.rows();
    let d_inv = inv_diag(&qr);
    Ok(PrecoderBlocks {
        structure: Structure::Thp,
        e: CMatrix::identity(l),
        b: &d_inv * &qr.r.adjoint(),
        f: qr.q,
        g: d_inv,
        tau: default_tau(l),
        tau_tilde: default_tau(l),
        muted: vec![false; l],
        gain: 1.0,
        order: Some(Permutation::identity(l)),
    })
}

/// Ordered THP with processing order `pi`.
pub fn build_ordered_thp(h: &CMatrix, pi: &Permutation) -> Result<PrecoderBlocks> {
    require_square(h)?;
    let qr = forced_order_qr(&h.adjoint(), pi)?;
    ordered_thp_from_factorization(&qr)
}

/// Ordered THP blocks from a factorization `Hᴴ = Q R Pᵀ`.
///
/// A lattice-reduced factorization is rejected: its receiver matrix
/// `T⁻ᴴ diag(R)⁻¹ Tᴴ` is not diagonal, so separate receivers cannot apply it.
pub fn ordered_thp_from_factorization(qr: &QrFactorization) -> Result<PrecoderBlocks> {
    if qr.lr_transform.is_some() {
        return Err(Error::InvalidScheme(
            "lattice reduction cannot be combined with per-line THP: receiver scaling would not be diagonal".into(),
        ));
    }
    let l = qr.dim();
    let p = qr.perm.matrix();
    let pt = p.adjoint();
    let d_inv = inv_diag(qr);
    let g = &(&p * &d_inv) * &pt;
    Ok(PrecoderBlocks {
        structure: Structure::Thp,
        e: pt,
        b: &d_inv * &qr.r.adjoint(),
        f: qr.q.clone(),
        g,
        tau: default_tau(l),
        tau_tilde: default_tau(l),
        muted: vec![false; l],
        gain: 1.0,
        order: Some(qr.perm.clone()),
    })
}

/// Equal-rate THP: `B = Rᴴ diag(R)⁻¹`, `F = Q diag(R)⁻¹ / g`, `G = g I`,
/// with `g² = max_i Σ_j |q_ij|² / r_jj²` enforcing the per-line power limit.
///
/// Without lattice reduction the QR runs in order `pi` and `E = Pᵀ`. With
/// reduction `pi` must be the identity: the order comes from the reduction
/// itself (and an optional sort of the reduced basis), and `E = Pᵀ Tᴴ`.
pub fn build_er_thp(h: &CMatrix, pi: &Permutation, lr: Option<LatticeReduction>) -> Result<PrecoderBlocks> {
    require_square(h)?;
    let hh = h.adjoint();
    let qr = match lr {
        None => forced_order_qr(&hh, pi)?,
        Some(opts) => {
            if !pi.is_identity() {
                return Err(Error::InvalidScheme(
                    "lattice-reduced ER-THP derives its own order; pass the identity permutation".into(),
                ));
            }
            lll_qr(&hh, opts.delta, opts.with_vb)?
        }
    };
    er_thp_from_factorization(&qr)
}

pub fn er_thp_from_factorization(qr: &QrFactorization) -> Result<PrecoderBlocks> {
    let l = qr.dim();
    let r = qr.r_diag();
    let gain_sqr = (0..l)
        .map(|i| (0..l).map(|j| qr.q[(i, j)].norm_sqr() / (r[j] * r[j])).sum::<f64>())
        .fold(0.0, f64::max);
    let gain = gain_sqr.sqrt();
    let d_inv = inv_diag(qr);
    let pt = qr.perm.matrix().adjoint();
    let (e, order) = match &qr.lr_transform {
        None => (pt, Some(qr.perm.clone())),
        Some(t) => (&pt * &t.adjoint().to_cmatrix(), None),
    };
    Ok(PrecoderBlocks {
        structure: Structure::EqualRate,
        e,
        b: &qr.r.adjoint() * &d_inv,
        f: (&qr.q * &d_inv).scale_real(1.0 / gain),
        g: CMatrix::identity(l).scale_real(gain),
        tau: default_tau(l),
        tau_tilde: default_tau(l),
        muted: vec![false; l],
        gain,
        order,
    })
}

/// Linear diagonal precoding: `F = H⁻¹ diag(H) / g`, `G = diag(g / h_ii)`,
/// with `g² = max_i ‖row_i(H⁻¹ diag(H))‖²`.
pub fn build_dp(h: &CMatrix) -> Result<PrecoderBlocks> {
    require_square(h)?;
    let l = h.rows();
    let diag = h.diag();
    if let Some(i) = diag.iter().position(|d| d.norm() == 0.0) {
        return Err(Error::invalid(format!("zero direct gain on line {i}")));
    }
    let unscaled = &h.inverse()? * &CMatrix::from_diag(&diag);
    let gain = (0..l).map(|i| unscaled.row_norm_sqr(i)).fold(0.0, f64::max).sqrt();
    let g: Vec<C64> = diag.iter().map(|d| C64::new(gain, 0.0) / d).collect();
    Ok(PrecoderBlocks {
        structure: Structure::Linear,
        e: CMatrix::identity(l),
        b: CMatrix::identity(l),
        f: unscaled.scale_real(1.0 / gain),
        g: CMatrix::from_diag(&g),
        tau: default_tau(l),
        tau_tilde: default_tau(l),
        muted: vec![false; l],
        gain,
        order: Some(Permutation::identity(l)),
    })
}

/// Run the feedback loop with explicit per-stream thresholds.
/// Returns the transmit vector `x = F x̃` and the loop output `x̃`.
pub fn precode_with_thresholds(blocks: &PrecoderBlocks, a: &[C64], tau: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let v = blocks.e.mul_vec(a);
    let mut xt: Vec<C64> = Vec::with_capacity(v.len());
    for (k, vk) in v.iter().enumerate() {
        if blocks.muted[k] {
            xt.push(C64::new(0.0, 0.0));
            continue;
        }
        let fb: C64 = (0..k).map(|j| blocks.b[(k, j)] * xt[j]).sum();
        let u = vk - fb;
        xt.push(match blocks.structure {
            Structure::Linear => u,
            _ => modulo_reduce(u, tau[k]),
        });
    }
    (blocks.f.mul_vec(&xt), xt)
}

/// Transmit vector for data symbols `a` using the thresholds in `blocks`.
pub fn precode(blocks: &PrecoderBlocks, a: &[C64]) -> Vec<C64> {
    precode_with_thresholds(blocks, a, &blocks.tau).0
}

/// `γ_i = γ_base / |G_ii|²`, since the receiver sees `a_i + G_ii w_i`.
pub fn snr_profile(blocks: &PrecoderBlocks, gamma_base: f64) -> SnrProfile {
    SnrProfile {
        gamma: blocks.g.diag().iter().map(|g| gamma_base / g.norm_sqr()).collect(),
        gamma_base,
    }
}

/// Zero-forcing residual `‖G H F B⁻¹ E − I‖_max`.
pub fn verify_zf(blocks: &PrecoderBlocks, h: &CMatrix) -> Result<f64> {
    let b_inv = blocks.b.inverse()?;
    let chain = &(&(&(&blocks.g * h) * &blocks.f) * &b_inv) * &blocks.e;
    Ok(chain.max_abs_diff(&CMatrix::identity(h.rows())))
}
