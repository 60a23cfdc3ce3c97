//! Gap-formula bit loading, modulo energy correction and rate aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::Result;
use crate::linalg::{CMatrix, Permutation};
use crate::ordering::{plan_orderings, OrderingPlan};
use crate::precoding::{
    build_dp, build_er_thp, build_ordered_thp, build_reference_thp, delta_e_linear, snr_profile,
    LatticeReduction, PrecoderBlocks, SchemeId, Structure,
};

/// Gap-formula parameters plus the baseline SNR and framing overhead used
/// when turning bits into throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    pub shannon_gap_db: f64,
    pub margin_db: f64,
    pub coding_gain_db: f64,
    pub b_min: u8,
    pub b_max: u8,
    pub gamma_base_db: f64,
    pub framing_overhead: f64,
}

impl Default for GapParams {
    fn default() -> Self {
        Self {
            shannon_gap_db: 9.8,
            margin_db: 6.0,
            coding_gain_db: 5.0,
            b_min: 2,
            b_max: 12,
            // transmit PSD -76 dBm/Hz over noise PSD -140 dBm/Hz
            gamma_base_db: 64.0,
            framing_overhead: 0.12,
        }
    }
}

impl GapParams {
    pub fn gap_db(&self) -> f64 {
        self.shannon_gap_db + self.margin_db - self.coding_gain_db
    }

    pub fn gap_linear(&self) -> f64 {
        db_to_linear(self.gap_db())
    }

    pub fn gamma_base(&self) -> f64 {
        db_to_linear(self.gamma_base_db)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b_min == 0 || self.b_min > self.b_max || self.b_max > crate::precoding::MAX_BITS {
            return Err(crate::Error::InvalidArgument(format!(
                "bit range [{}, {}] must satisfy 1 <= b_min <= b_max <= {}",
                self.b_min,
                self.b_max,
                crate::precoding::MAX_BITS
            )));
        }
        if !(0.0..1.0).contains(&self.framing_overhead) {
            return Err(crate::Error::InvalidArgument("framing overhead must be in [0, 1)".into()));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `floor(log2(1 + γ/Γ))`, zero below `b_min`, capped at `b_max`.
pub fn gap_bits(gamma: f64, gap: &GapParams) -> u8 {
    if !(gamma > 0.0) {
        return 0;
    }
    let raw = (1.0 + gamma / gap.gap_linear()).log2().floor();
    if raw < gap.b_min as f64 {
        0
    } else if raw >= gap.b_max as f64 {
        gap.b_max
    } else {
        raw as u8
    }
}

fn energy_factor(bits: u8) -> f64 {
    if bits == 0 {
        1.0
    } else {
        delta_e_linear(bits).expect("bit load within table")
    }
}

/// Bit load after charging the modulo energy increase `ΔE(b)` against the
/// SNR, iterated to a fixed point. A two-cycle resolves to the smaller load.
pub fn corrected_bits(gamma: f64, gap: &GapParams) -> u8 {
    const MAX_ITER: usize = 8;
    let mut prev: Option<u8> = None;
    let mut cur = gap_bits(gamma, gap);
    for _ in 0..MAX_ITER {
        let next = gap_bits(gamma / energy_factor(cur), gap);
        if next == cur {
            return cur;
        }
        if prev == Some(next) {
            return cur.min(next);
        }
        prev = Some(cur);
        cur = next;
    }
    prev.map_or(cur, |p| p.min(cur))
}

/// Throughput in Mbps: `Σ b · Δf · (1 − overhead)`.
pub fn aggregate(bits: &[u8], delta_f: f64, framing_overhead: f64) -> f64 {
    let total: u64 = bits.iter().map(|&b| b as u64).sum();
    total as f64 * delta_f * (1.0 - framing_overhead) / 1e6
}

/// Per-line rates of one scheme over a channel set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub scheme: String,
    pub strategy: String,
    /// `bits[line][tone]`.
    pub bits: Vec<Vec<u8>>,
    pub rate_mbps: Vec<f64>,
    pub mean_mbps: f64,
    pub min_mbps: f64,
    pub failed_tones: Vec<usize>,
}

impl RateReport {
    fn from_bits(scheme: &SchemeId, bits: Vec<Vec<u8>>, failed_tones: Vec<usize>, delta_f: f64, gap: &GapParams) -> Self {
        let rate_mbps: Vec<f64> = bits.iter().map(|b| aggregate(b, delta_f, gap.framing_overhead)).collect();
        // mean bits per line first, so equal per-line loads give mean == min exactly
        let total: u64 = bits.iter().flatten().map(|&b| b as u64).sum();
        let mean_bits = total as f64 / bits.len() as f64;
        let mean_mbps = mean_bits * delta_f * (1.0 - gap.framing_overhead) / 1e6;
        let min_mbps = rate_mbps.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            scheme: scheme.label(),
            strategy: scheme.strategy().label(),
            bits,
            rate_mbps,
            mean_mbps,
            min_mbps,
            failed_tones,
        }
    }
}

/// Blocks of `scheme` on one tone. `perm` is the tone's processing order
/// for the schemes that take one (ignored by the others).
pub fn build_scheme_blocks(h: &CMatrix, scheme: &SchemeId, perm: &Permutation) -> Result<PrecoderBlocks> {
    match scheme {
        SchemeId::Dp => build_dp(h),
        SchemeId::Thp => build_reference_thp(h),
        SchemeId::ThpOrdered(_) => build_ordered_thp(h, perm),
        SchemeId::ErThp(_) => build_er_thp(h, perm, None),
        SchemeId::ErThpLr { delta } => build_er_thp(
            h,
            &Permutation::identity(h.rows()),
            Some(LatticeReduction {
                delta: *delta,
                with_vb: false,
            }),
        ),
        SchemeId::ErThpLrVb { delta } => build_er_thp(
            h,
            &Permutation::identity(h.rows()),
            Some(LatticeReduction {
                delta: *delta,
                with_vb: true,
            }),
        ),
    }
}

/// Per-line bits for already built blocks: corrected loading for modulo
/// schemes, plain gap loading for the linear one.
pub fn blocks_bits(blocks: &PrecoderBlocks, gap: &GapParams) -> Vec<u8> {
    let snr = snr_profile(blocks, gap.gamma_base());
    snr.gamma
        .iter()
        .map(|&g| match blocks.structure {
            Structure::Linear => gap_bits(g, gap),
            _ => corrected_bits(g, gap),
        })
        .collect()
}

/// Orders used by `scheme` on every tone (identity for schemes without one).
pub fn scheme_orderings(set: &ChannelSet, scheme: &SchemeId, gap: &GapParams) -> Result<OrderingPlan> {
    match scheme {
        SchemeId::ThpOrdered(s) | SchemeId::ErThp(s) => plan_orderings(set, s, gap),
        _ => plan_orderings(set, &crate::ordering::OrderingStrategy::Identity, gap),
    }
}

/// Bit-load and aggregate `scheme` over every tone of `set`.
pub fn evaluate_scheme(set: &ChannelSet, scheme: &SchemeId, gap: &GapParams) -> Result<RateReport> {
    scheme.validate()?;
    gap.validate()?;
    let plan = scheme_orderings(set, scheme, gap)?;
    let per_tone: Vec<Option<Vec<u8>>> = (0..set.tone_count())
        .into_par_iter()
        .map(|k| {
            build_scheme_blocks(set.tone(k), scheme, &plan.perms[k])
                .ok()
                .map(|blocks| blocks_bits(&blocks, gap))
        })
        .collect();
    let mut bits = vec![vec![0u8; set.tone_count()]; set.lines()];
    let mut failed = plan.failed_tones.clone();
    for (k, tone_bits) in per_tone.into_iter().enumerate() {
        match tone_bits {
            Some(b) => {
                for (line, v) in b.into_iter().enumerate() {
                    bits[line][k] = v;
                }
            }
            None => failed.push(k),
        }
    }
    failed.sort_unstable();
    failed.dedup();
    Ok(RateReport::from_bits(scheme, bits, failed, set.plan().delta_f, gap))
}
