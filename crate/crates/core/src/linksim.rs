//! Symbol-level Monte Carlo of the full non-linear chain: QAM mapping,
//! modulo precoding, channel, receiver scaling and modulo, detection.
//!
//! Constellations enter the loop pre-scaled by `1/√ΔE(b)` (with their
//! modulo thresholds scaled alike), which keeps the loop output at unit
//! power and the SNR seen by the detector at `γ/ΔE`, the value the corrected
//! bit loading assumes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitloading::{blocks_bits, build_scheme_blocks, scheme_orderings, GapParams};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::precoding::{
    delta_e_linear, grid_points, modulo_reduce, precode_with_thresholds, verify_zf, PrecoderBlocks, SchemeId,
    Structure, IDLE_BITS,
};
use crate::rng::splitmix64;

/// Unit-energy square QAM.
///
/// Even `b` uses the full `2^(b/2) × 2^(b/2)` grid with per-axis Gray
/// labels. Odd `b` keeps the checkerboard half of the `2^(b+1)`-point grid,
/// labelled in lexicographic `(Re, Im)` order; it has the same energy and
/// modulo box as the full grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub bits: u8,
    pub points: Vec<C64>,
    /// Smallest distance between two points.
    pub d_min: f64,
    /// Spacing of the underlying grid.
    pub grid_spacing: f64,
    /// Side of the modulo box.
    pub tau: f64,
    side: usize,
    /// `label_at[i * side + j]` for grid cell (i, j), `None` off the checkerboard.
    label_at: Vec<Option<u32>>,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

impl Constellation {
    pub fn new(bits: u8) -> Result<Self> {
        let m = grid_points(bits)?;
        let side = (m as f64).sqrt().round() as usize;
        let spacing = (6.0 / (m as f64 - 1.0)).sqrt();
        let tau = side as f64 * spacing;
        let coord = |i: usize| (i as f64 + 0.5) * spacing - tau / 2.0;
        let mut label_at = vec![None; side * side];
        let mut points = vec![C64::new(0.0, 0.0); 1 << bits];
        if bits % 2 == 0 {
            let half = bits / 2;
            for i in 0..side {
                for j in 0..side {
                    let label = (gray(i as u32) << half) | gray(j as u32);
                    label_at[i * side + j] = Some(label);
                    points[label as usize] = C64::new(coord(i), coord(j));
                }
            }
        } else {
            let mut label = 0u32;
            for i in 0..side {
                for j in (0..side).filter(|j| (i + j) % 2 == 0) {
                    label_at[i * side + j] = Some(label);
                    points[label as usize] = C64::new(coord(i), coord(j));
                    label += 1;
                }
            }
        }
        let d_min = if bits % 2 == 0 {
            spacing
        } else {
            spacing * std::f64::consts::SQRT_2
        };
        Ok(Self {
            bits,
            points,
            d_min,
            grid_spacing: spacing,
            tau,
            side,
            label_at,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn map(&self, label: u32) -> C64 {
        self.points[label as usize]
    }

    fn cell(&self, v: f64) -> isize {
        ((v + self.tau / 2.0) / self.grid_spacing - 0.5).round() as isize
    }

    /// Nearest-point decision.
    pub fn demap(&self, y: C64) -> u32 {
        let s = self.side as isize;
        let clamp = |c: isize| c.clamp(0, s - 1);
        let (i, j) = (clamp(self.cell(y.re)), clamp(self.cell(y.im)));
        if let Some(label) = self.label_at[(i * s + j) as usize] {
            return label;
        }
        // off-checkerboard cell: the nearest point is one of its neighbours
        [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
            .into_iter()
            .filter(|&(a, b)| (0..s).contains(&a) && (0..s).contains(&b))
            .filter_map(|(a, b)| self.label_at[(a * s + b) as usize])
            .min_by(|&a, &b| (self.map(a) - y).norm_sqr().total_cmp(&(self.map(b) - y).norm_sqr()))
            .expect("every cell has a checkerboard neighbour")
    }
}

pub fn qam_map(label: u32, constellation: &Constellation) -> C64 {
    constellation.map(label)
}

pub fn qam_demap(y: C64, constellation: &Constellation) -> u32 {
    constellation.demap(y)
}

/// Outcome of one Monte Carlo link run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub symbols: usize,
    /// Per receiver (physical line).
    pub bits: Vec<u8>,
    pub symbol_errors: Vec<usize>,
    /// Empirical `E[|x_i|²]` per transmit line.
    pub tx_power: Vec<f64>,
    /// Standard error of each `tx_power` estimate.
    pub tx_power_stderr: Vec<f64>,
    /// Empirical `E[|x̃_k|²]` per processed stream.
    pub loop_power: Vec<f64>,
    /// Loop-output power over constellation power per stream, in dB;
    /// `None` for muted streams.
    pub delta_e_emp_db: Vec<Option<f64>>,
    pub zf_residual: f64,
}

impl LinkReport {
    pub fn total_errors(&self) -> usize {
        self.symbol_errors.iter().sum()
    }
}

fn prescale(bits: u8, structure: Structure) -> f64 {
    match structure {
        Structure::Linear => 1.0,
        _ => 1.0 / delta_e_linear(if bits == 0 { IDLE_BITS } else { bits }).unwrap().sqrt(),
    }
}

/// Simulate `n_symbols` channel uses of `blocks` on `h` with per-line bit
/// loads `bits` (physical line order). `blocks` thresholds are re-derived
/// from `bits`; lines with zero bits send nothing and are not scored.
pub fn run_link(
    h: &CMatrix,
    blocks: &PrecoderBlocks,
    bits: &[u8],
    n_symbols: usize,
    noise_variance: f64,
    seed: u64,
) -> Result<LinkReport> {
    let l = blocks.lines();
    if h.rows() != l || h.cols() != l {
        return Err(Error::DimensionMismatch {
            expected: format!("{l}x{l} channel"),
            got: format!("{}x{}", h.rows(), h.cols()),
        });
    }
    if !(noise_variance >= 0.0) {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    let mut blocks = blocks.clone();
    blocks.assign_bits(bits)?;
    let constellations: Vec<Option<Constellation>> = bits
        .iter()
        .map(|&b| if b == 0 { Ok(None) } else { Constellation::new(b).map(Some) })
        .collect::<Result<_>>()?;
    let scale: Vec<f64> = bits.iter().map(|&b| prescale(b, blocks.structure)).collect();
    let stream_scale: Vec<f64> = match (&blocks.order, blocks.structure) {
        (Some(order), Structure::Thp) => order.gather(&scale),
        _ => vec![scale[0]; l],
    };
    let tau_loop: Vec<f64> = blocks.tau.iter().zip(&stream_scale).map(|(t, s)| t * s).collect();
    let tau_rx: Vec<f64> = blocks.tau_tilde.iter().zip(&scale).map(|(t, s)| t * s).collect();
    let g = blocks.g.diag();
    let noise_std = (noise_variance / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = vec![0usize; l];
    let mut tx_sum = vec![0.0; l];
    let mut tx_sq = vec![0.0; l];
    let mut loop_sum = vec![0.0; l];
    let mut labels = vec![0u32; l];
    let mut a = vec![C64::new(0.0, 0.0); l];
    for _ in 0..n_symbols {
        for j in 0..l {
            a[j] = match &constellations[j] {
                Some(c) => {
                    labels[j] = rng.gen_range(0..c.len() as u32);
                    c.map(labels[j]) * scale[j]
                }
                None => C64::new(0.0, 0.0),
            };
        }
        let (x, xt) = precode_with_thresholds(&blocks, &a, &tau_loop);
        for i in 0..l {
            let p = x[i].norm_sqr();
            tx_sum[i] += p;
            tx_sq[i] += p * p;
            loop_sum[i] += xt[i].norm_sqr();
        }
        let mut y = h.mul_vec(&x);
        if noise_std > 0.0 {
            for yi in y.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *yi += C64::new(re, im) * noise_std;
            }
        }
        for j in 0..l {
            let Some(c) = &constellations[j] else { continue };
            let mut r = g[j] * y[j];
            if blocks.structure != Structure::Linear {
                r = modulo_reduce(r, tau_rx[j]);
            }
            if c.demap(r / scale[j]) != labels[j] {
                errors[j] += 1;
            }
        }
    }

    let n = n_symbols.max(1) as f64;
    let tx_power: Vec<f64> = tx_sum.iter().map(|s| s / n).collect();
    let tx_power_stderr = tx_sq
        .iter()
        .zip(&tx_power)
        .map(|(sq, m)| ((sq / n - m * m).max(0.0) / n).sqrt())
        .collect();
    let loop_power: Vec<f64> = loop_sum.iter().map(|s| s / n).collect();
    let delta_e_emp_db = loop_power
        .iter()
        .zip(&stream_scale)
        .zip(&blocks.muted)
        .map(|((p, s), &muted)| (!muted).then(|| 10.0 * (p / (s * s)).log10()))
        .collect();
    Ok(LinkReport {
        symbols: n_symbols,
        bits: bits.to_vec(),
        symbol_errors: errors,
        tx_power,
        tx_power_stderr,
        loop_power,
        delta_e_emp_db,
        zf_residual: verify_zf(&blocks, h)?,
    })
}

/// Noise applied in [`verify_e2e`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseMode {
    Free,
    /// Receiver noise at `1/γ_base`.
    Baseline,
}

/// Aggregate of per-tone link runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E2eSummary {
    pub scheme: String,
    pub tones: usize,
    pub symbols_per_tone: usize,
    /// Scored symbols per line (tones where the line carries bits).
    pub symbols: Vec<usize>,
    pub symbol_errors: Vec<usize>,
    pub ser: Vec<f64>,
    /// Transmit power per line averaged over the simulated tones.
    pub mean_tx_power: Vec<f64>,
    /// Standard error of each `mean_tx_power` estimate.
    pub mean_tx_power_stderr: Vec<f64>,
    /// Largest single-tone transmit power estimate.
    pub max_tx_power: f64,
    pub max_zf_residual: f64,
    pub failed_tones: Vec<usize>,
}

impl E2eSummary {
    pub fn total_errors(&self) -> usize {
        self.symbol_errors.iter().sum()
    }
}

/// Per-tone RNG stream derived from the master seed.
pub fn tone_seed(master: u64, tone: usize) -> u64 {
    splitmix64(master, tone as u64)
}

/// Drive [`run_link`] over `tones` of `set` (all tones when `None`) using
/// each tone's evaluated bit allocation.
pub fn verify_e2e(
    set: &ChannelSet,
    scheme: &SchemeId,
    gap: &GapParams,
    n_symbols: usize,
    seed: u64,
    noise: NoiseMode,
    tones: Option<&[usize]>,
) -> Result<E2eSummary> {
    let plan = scheme_orderings(set, scheme, gap)?;
    let all: Vec<usize>;
    let tones = match tones {
        Some(t) => t,
        None => {
            all = (0..set.tone_count()).collect();
            &all
        }
    };
    let noise_variance = match noise {
        NoiseMode::Free => 0.0,
        NoiseMode::Baseline => 1.0 / gap.gamma_base(),
    };
    let runs: Vec<(usize, Option<LinkReport>)> = tones
        .par_iter()
        .map(|&k| {
            let h = set.tone(k);
            let report = build_scheme_blocks(h, scheme, &plan.perms[k]).ok().and_then(|blocks| {
                let bits = blocks_bits(&blocks, gap);
                run_link(h, &blocks, &bits, n_symbols, noise_variance, tone_seed(seed, k)).ok()
            });
            (k, report)
        })
        .collect();

    let l = set.lines();
    let mut summary = E2eSummary {
        scheme: scheme.label(),
        tones: tones.len(),
        symbols_per_tone: n_symbols,
        symbols: vec![0; l],
        symbol_errors: vec![0; l],
        ser: vec![0.0; l],
        mean_tx_power: vec![0.0; l],
        mean_tx_power_stderr: vec![0.0; l],
        max_tx_power: 0.0,
        max_zf_residual: 0.0,
        failed_tones: Vec::new(),
    };
    for (k, report) in runs {
        let Some(r) = report else {
            summary.failed_tones.push(k);
            continue;
        };
        for j in 0..l {
            if r.bits[j] > 0 {
                summary.symbols[j] += r.symbols;
                summary.symbol_errors[j] += r.symbol_errors[j];
            }
        }
        for (acc, p) in summary.mean_tx_power.iter_mut().zip(&r.tx_power) {
            *acc += p;
        }
        for (acc, se) in summary.mean_tx_power_stderr.iter_mut().zip(&r.tx_power_stderr) {
            *acc += se * se;
        }
        summary.max_tx_power = r.tx_power.iter().copied().fold(summary.max_tx_power, f64::max);
        summary.max_zf_residual = summary.max_zf_residual.max(r.zf_residual);
    }
    let simulated = (summary.tones - summary.failed_tones.len()).max(1) as f64;
    for p in summary.mean_tx_power.iter_mut() {
        *p /= simulated;
    }
    for se in summary.mean_tx_power_stderr.iter_mut() {
        *se = se.sqrt() / simulated;
    }
    for j in 0..l {
        if summary.symbols[j] > 0 {
            summary.ser[j] = summary.symbol_errors[j] as f64 / summary.symbols[j] as f64;
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for i in 0..64 {
            assert_eq!((gray(i) ^ gray(i + 1)).count_ones(), 1);
        }
    }

    #[test]
    fn constellation_geometry() {
        for b in 1..=12u8 {
            let c = Constellation::new(b).unwrap();
            assert_eq!(c.len(), 1 << b);
            assert!((c.mean_energy() - 1.0).abs() < 1e-12, "b={b}: {}", c.mean_energy());
            assert!((c.tau - crate::precoding::tau_for_bits(b).unwrap()).abs() < 1e-12);
            let edge = c.points.iter().map(|p| p.re.abs().max(p.im.abs())).fold(0.0, f64::max);
            assert!((c.tau / 2.0 - edge - c.grid_spacing / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn min_distance_brute_force() {
        for b in 1..=7u8 {
            let c = Constellation::new(b).unwrap();
            let mut best = f64::INFINITY;
            for (i, p) in c.points.iter().enumerate() {
                for q in &c.points[i + 1..] {
                    best = best.min((p - q).norm());
                }
            }
            assert!((best - c.d_min).abs() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn every_label_round_trips() {
        for b in 1..=12u8 {
            let c = Constellation::new(b).unwrap();
            for label in 0..c.len() as u32 {
                assert_eq!(qam_demap(qam_map(label, &c), &c), label);
            }
        }
    }

    #[test]
    fn four_qam_labels() {
        let c = Constellation::new(2).unwrap();
        let mut labels: Vec<u32> = c.points.iter().map(|&p| c.demap(p)).collect();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn midpoint_plus_epsilon_goes_to_nearer_point() {
        for b in [3u8, 4] {
            let c = Constellation::new(b).unwrap();
            let (p, q) = c
                .points
                .iter()
                .enumerate()
                .flat_map(|(i, p)| c.points[i + 1..].iter().map(move |q| (*p, *q)))
                .find(|(p, q)| ((p - q).norm() - c.d_min).abs() < 1e-12)
                .unwrap();
            let mid = (p + q) / 2.0;
            let towards_q = mid + (q - p) * 1e-6;
            assert_eq!(c.demap(towards_q), c.demap(q));
            let towards_p = mid - (q - p) * 1e-6;
            assert_eq!(c.demap(towards_p), c.demap(p));
        }
    }

    #[test]
    fn far_outside_points_clamp() {
        let c = Constellation::new(5).unwrap();
        let label = c.demap(C64::new(100.0, -100.0));
        let p = c.map(label);
        assert!(p.re > 0.0 && p.im < 0.0);
    }
}
