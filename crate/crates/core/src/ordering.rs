//! Per-tone processing orders: identity, V-BLAST, inverse V-BLAST, Dynamic
//! Ordering and frequency sharing between two of them.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitloading::{corrected_bits, GapParams};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{pivoted_qr, sorted_qr, CMatrix, Permutation};
use crate::precoding::{build_ordered_thp, snr_profile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OrderingStrategy {
    Identity,
    /// "Weakest first" per tone.
    Vb,
    /// "Strongest first" per tone.
    Ivb,
    /// "Aggregated minimum first", sequential over tones.
    Do,
    /// `low` on tones below `f_start + b_do` (Hz), `high` on the rest.
    FreqShare {
        low: Box<OrderingStrategy>,
        high: Box<OrderingStrategy>,
        b_do: f64,
    },
}

impl OrderingStrategy {
    pub fn freq_share(low: OrderingStrategy, high: OrderingStrategy, b_do: f64) -> Self {
        OrderingStrategy::FreqShare {
            low: Box::new(low),
            high: Box::new(high),
            b_do,
        }
    }

    pub fn label(&self) -> String {
        match self {
            OrderingStrategy::Identity => "ID".into(),
            OrderingStrategy::Vb => "VB".into(),
            OrderingStrategy::Ivb => "IVB".into(),
            OrderingStrategy::Do => "DO".into(),
            OrderingStrategy::FreqShare { low, high, b_do } => {
                format!("{}-{}@{}", low.label(), high.label(), b_do)
            }
        }
    }

    /// Accepts `ID`, `VB`, `IVB`, `DO` and `<low>-<high>@<b_do Hz>`
    /// (case-insensitive).
    pub fn parse(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let strategy = match up.as_str() {
            "ID" | "IDENTITY" => OrderingStrategy::Identity,
            "VB" => OrderingStrategy::Vb,
            "IVB" => OrderingStrategy::Ivb,
            "DO" => OrderingStrategy::Do,
            _ => {
                let (pair, bw) = up
                    .split_once('@')
                    .ok_or_else(|| Error::InvalidScheme(format!("unknown ordering `{s}`")))?;
                let (low, high) = pair
                    .split_once('-')
                    .ok_or_else(|| Error::InvalidScheme(format!("frequency sharing needs `low-high@Hz`, got `{s}`")))?;
                let b_do: f64 = bw
                    .parse()
                    .map_err(|_| Error::InvalidScheme(format!("bad sharing bandwidth `{bw}`")))?;
                OrderingStrategy::freq_share(Self::parse(low)?, Self::parse(high)?, b_do)
            }
        };
        strategy.validate()?;
        Ok(strategy)
    }

    pub fn validate(&self) -> Result<()> {
        if let OrderingStrategy::FreqShare { low, high, b_do } = self {
            if matches!(**low, OrderingStrategy::FreqShare { .. }) || matches!(**high, OrderingStrategy::FreqShare { .. }) {
                return Err(Error::InvalidScheme("frequency sharing cannot be nested".into()));
            }
            if !(b_do.is_finite() && *b_do >= 0.0) {
                return Err(Error::InvalidScheme(format!("sharing bandwidth {b_do} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn uses_dynamic_ordering(&self) -> bool {
        match self {
            OrderingStrategy::Do => true,
            OrderingStrategy::FreqShare { low, high, .. } => low.uses_dynamic_ordering() || high.uses_dynamic_ordering(),
            _ => false,
        }
    }
}

impl fmt::Display for OrderingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// V-BLAST order: sorted QR of `Hᴴ`.
pub fn vb_order(h: &CMatrix) -> Result<Permutation> {
    Ok(sorted_qr(&h.adjoint())?.perm)
}

/// Inverse V-BLAST order: pivoted QR of `Hᴴ`.
pub fn ivb_order(h: &CMatrix) -> Result<Permutation> {
    Ok(pivoted_qr(&h.adjoint())?.perm)
}

/// Per-tone orders for a whole channel set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingPlan {
    pub perms: Vec<Permutation>,
    /// For tones ordered dynamically: per-line bits aggregated over the
    /// earlier tones of the same dynamic run, as seen when ordering.
    pub aggregates: Vec<Option<Vec<u64>>>,
    /// Tones whose channel could not be factored.
    pub failed_tones: Vec<usize>,
}

/// Output of the tone-sequential Dynamic Ordering loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicRun {
    pub perms: Vec<Permutation>,
    /// `bits[t][line]` loaded on the t-th tone of the run.
    pub bits: Vec<Vec<u8>>,
    pub aggregates_before: Vec<Vec<u64>>,
    pub failed: Vec<usize>,
}

impl DynamicRun {
    pub fn totals(&self) -> Vec<u64> {
        let lines = self.perms.first().map_or(0, Permutation::len);
        let mut agg = vec![0u64; lines];
        for bits in &self.bits {
            for (a, &b) in agg.iter_mut().zip(bits) {
                *a += b as u64;
            }
        }
        agg
    }
}

/// Dynamic Ordering over `tones` tones of `lines` lines.
///
/// On each tone the lines are processed in ascending order of the bits they
/// have accumulated so far; ties fall back to the tone's V-BLAST position and
/// then to the line index. With all aggregates zero on the first tone this
/// reproduces V-BLAST there. `vb(t)` yields the V-BLAST order of tone `t`
/// and `load(t, order)` the per-line bits obtained with `order`; an error
/// from either marks the tone as failed with zero bits.
pub fn dynamic_ordering(
    tones: usize,
    lines: usize,
    mut vb: impl FnMut(usize) -> Result<Permutation>,
    mut load: impl FnMut(usize, &Permutation) -> Result<Vec<u8>>,
) -> DynamicRun {
    let mut agg = vec![0u64; lines];
    let mut run = DynamicRun {
        perms: Vec::with_capacity(tones),
        bits: Vec::with_capacity(tones),
        aggregates_before: Vec::with_capacity(tones),
        failed: Vec::new(),
    };
    for t in 0..tones {
        let vb_pos = match vb(t) {
            Ok(p) => p.inverse(),
            Err(_) => {
                run.failed.push(t);
                Permutation::identity(lines)
            }
        };
        let mut order: Vec<usize> = (0..lines).collect();
        order.sort_by_key(|&line| (agg[line], vb_pos[line], line));
        let perm = Permutation::new(order).expect("sorted line indices form a permutation");
        let bits = match load(t, &perm) {
            Ok(b) => b,
            Err(_) => {
                if run.failed.last() != Some(&t) {
                    run.failed.push(t);
                }
                vec![0; lines]
            }
        };
        run.aggregates_before.push(agg.clone());
        for (a, &b) in agg.iter_mut().zip(&bits) {
            *a += b as u64;
        }
        run.perms.push(perm);
        run.bits.push(bits);
    }
    run
}

/// Per-line corrected bit loads of ordered THP with order `perm`.
pub fn ordered_thp_bits(h: &CMatrix, perm: &Permutation, gap: &GapParams) -> Result<Vec<u8>> {
    let blocks = build_ordered_thp(h, perm)?;
    let snr = snr_profile(&blocks, gap.gamma_base());
    Ok(snr.gamma.iter().map(|&g| corrected_bits(g, gap)).collect())
}

fn do_run_on(set: &ChannelSet, tones: &[usize], gap: &GapParams) -> DynamicRun {
    dynamic_ordering(
        tones.len(),
        set.lines(),
        |t| vb_order(set.tone(tones[t])),
        |t, perm| ordered_thp_bits(set.tone(tones[t]), perm, gap),
    )
}

/// Dynamic Ordering over the whole set, returning the plan and
/// `bits[line][tone]`.
pub fn do_plan(set: &ChannelSet, gap: &GapParams) -> (OrderingPlan, Vec<Vec<u8>>) {
    let tones: Vec<usize> = (0..set.tone_count()).collect();
    let run = do_run_on(set, &tones, gap);
    let mut bits = vec![vec![0u8; set.tone_count()]; set.lines()];
    for (t, tone_bits) in run.bits.iter().enumerate() {
        for (line, &b) in tone_bits.iter().enumerate() {
            bits[line][t] = b;
        }
    }
    let plan = OrderingPlan {
        aggregates: run.aggregates_before.into_iter().map(Some).collect(),
        perms: run.perms,
        failed_tones: run.failed,
    };
    (plan, bits)
}

fn per_tone_order(strategy: &OrderingStrategy, h: &CMatrix) -> Result<Permutation> {
    match strategy {
        OrderingStrategy::Identity => Ok(Permutation::identity(h.rows())),
        OrderingStrategy::Vb => vb_order(h),
        OrderingStrategy::Ivb => ivb_order(h),
        _ => unreachable!("only per-tone strategies"),
    }
}

/// Orders for every tone of `set` under `strategy`.
pub fn plan_orderings(set: &ChannelSet, strategy: &OrderingStrategy, gap: &GapParams) -> Result<OrderingPlan> {
    strategy.validate()?;
    let n = set.tone_count();
    let boundary = |b_do: f64| set.plan().f_start + b_do;
    let assigned: Vec<&OrderingStrategy> = (0..n)
        .map(|k| match strategy {
            OrderingStrategy::FreqShare { low, high, b_do } => {
                if set.frequency(k) < boundary(*b_do) {
                    low.as_ref()
                } else {
                    high.as_ref()
                }
            }
            s => s,
        })
        .collect();

    let per_tone: Vec<Option<Result<Permutation>>> = (0..n)
        .into_par_iter()
        .map(|k| match assigned[k] {
            OrderingStrategy::Do => None,
            s => Some(per_tone_order(s, set.tone(k))),
        })
        .collect();

    let mut plan = OrderingPlan {
        perms: Vec::with_capacity(n),
        aggregates: vec![None; n],
        failed_tones: Vec::new(),
    };
    let mut perms: Vec<Option<Permutation>> = vec![None; n];
    for (k, r) in per_tone.into_iter().enumerate() {
        match r {
            Some(Ok(p)) => perms[k] = Some(p),
            Some(Err(_)) => {
                plan.failed_tones.push(k);
                perms[k] = Some(Permutation::identity(set.lines()));
            }
            None => {}
        }
    }

    let do_tones: Vec<usize> = (0..n).filter(|&k| matches!(assigned[k], OrderingStrategy::Do)).collect();
    if !do_tones.is_empty() {
        let run = do_run_on(set, &do_tones, gap);
        for (t, &k) in do_tones.iter().enumerate() {
            perms[k] = Some(run.perms[t].clone());
            plan.aggregates[k] = Some(run.aggregates_before[t].clone());
        }
        plan.failed_tones.extend(run.failed.iter().map(|&t| do_tones[t]));
        plan.failed_tones.sort_unstable();
    }
    plan.perms = perms.into_iter().map(|p| p.expect("every tone ordered")).collect();
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TonePlan;

    #[test]
    fn vb_and_ivb_on_orthogonal_columns() {
        // Hᴴ has column norms (3, 1, 2)
        let h = CMatrix::from_real_diag(&[3.0, 1.0, 2.0]);
        assert_eq!(vb_order(&h).unwrap().as_slice(), &[1, 2, 0]);
        assert_eq!(ivb_order(&h).unwrap().as_slice(), &[0, 2, 1]);
        assert!(vb_order(&CMatrix::identity(3)).unwrap().is_identity());
        assert!(ivb_order(&CMatrix::identity(3)).unwrap().is_identity());
    }

    #[test]
    fn strategy_labels_parse_back() {
        for s in [
            OrderingStrategy::Identity,
            OrderingStrategy::Vb,
            OrderingStrategy::Ivb,
            OrderingStrategy::Do,
            OrderingStrategy::freq_share(OrderingStrategy::Do, OrderingStrategy::Ivb, 125e6),
        ] {
            assert_eq!(OrderingStrategy::parse(&s.label()).unwrap(), s);
        }
        assert!(OrderingStrategy::parse("DO-IVB").is_err());
        assert!(OrderingStrategy::parse("DO-IVB@-1").is_err());
    }

    #[test]
    fn nested_sharing_is_rejected() {
        let inner = OrderingStrategy::freq_share(OrderingStrategy::Do, OrderingStrategy::Ivb, 1.0);
        let outer = OrderingStrategy::freq_share(inner, OrderingStrategy::Vb, 1.0);
        assert!(outer.validate().is_err());
        let set = ChannelSet::uniform(TonePlan::new(1e6, 1e3, 2).unwrap(), CMatrix::identity(2)).unwrap();
        assert!(plan_orderings(&set, &outer, &GapParams::default()).is_err());
    }

    #[test]
    fn single_tone_do_equals_vb() {
        let h = CMatrix::from_rows(&[
            vec![crate::linalg::C64::new(1.0, 0.1), crate::linalg::C64::new(0.4, -0.2)],
            vec![crate::linalg::C64::new(0.1, 0.3), crate::linalg::C64::new(0.6, 0.0)],
        ])
        .unwrap();
        let set = ChannelSet::uniform(TonePlan::new(1e6, 1e3, 1).unwrap(), h.clone()).unwrap();
        let (plan, _) = do_plan(&set, &GapParams::default());
        assert_eq!(plan.perms[0], vb_order(&h).unwrap());
    }

    #[test]
    fn dynamic_ordering_failure_records_zero_bits() {
        let run = dynamic_ordering(
            2,
            2,
            |_| Ok(Permutation::identity(2)),
            |t, _| if t == 1 { Err(Error::invalid("boom")) } else { Ok(vec![3, 4]) },
        );
        assert_eq!(run.failed, vec![1]);
        assert_eq!(run.bits[1], vec![0, 0]);
        assert_eq!(run.totals(), vec![3, 4]);
    }
}
