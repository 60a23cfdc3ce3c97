//! The command front end: channel generation, rate tables, sharing sweeps,
//! self-verification and the weakest-line histogram. Each command returns
//! its result and, when asked, writes versioned CSV/JSON files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitloading::{build_scheme_blocks, evaluate_scheme, scheme_orderings, GapParams, RateReport};
use crate::channel::{gaussian_matrix, save_channel, weakest_line_histogram, ChannelSet};
use crate::config::RunConfig;
use crate::error::Result;
use crate::linalg::{exhaustive_maxmin_order, forced_order_qr, pivoted_qr, sorted_qr};
use crate::linksim::{verify_e2e, NoiseMode};
use crate::ordering::OrderingStrategy;
use crate::precoding::{verify_zf, SchemeId};

pub const CSV_VERSION: &str = "v1";

/// Power bound used by the verification command, before adding three
/// standard errors of the Monte Carlo estimate.
pub const POWER_LIMIT: f64 = 1.02;
pub const ZF_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputFormats {
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputFormats {
    fn default() -> Self {
        Self { csv: true, json: true }
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

pub fn cmd_gen_channel(config: &RunConfig, out_path: &Path) -> Result<ChannelSet> {
    config.validate()?;
    let set = config.channel_set()?;
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_channel(&set, out_path)?;
    Ok(set)
}

/// One printed row of the rate table (Mbps, one decimal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub scheme: String,
    pub strategy: String,
    pub mean_mbps: f64,
    pub min_mbps: f64,
    pub line_mbps: Vec<f64>,
    pub failed_tones: usize,
}

impl From<&RateReport> for RateRow {
    fn from(r: &RateReport) -> Self {
        Self {
            scheme: r.scheme.clone(),
            strategy: r.strategy.clone(),
            mean_mbps: round1(r.mean_mbps),
            min_mbps: round1(r.min_mbps),
            line_mbps: r.rate_mbps.iter().copied().map(round1).collect(),
            failed_tones: r.failed_tones.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub version: String,
    pub lines: usize,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn from_reports(lines: usize, reports: &[RateReport]) -> Self {
        Self {
            version: CSV_VERSION.into(),
            lines,
            rows: reports.iter().map(RateRow::from).collect(),
        }
    }

    pub fn row(&self, scheme: &str) -> Option<&RateRow> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }

    /// `scheme,strategy,mean_mbps,min_mbps,failed_tones,line0_mbps,...`
    pub fn to_csv(&self) -> String {
        let mut s = format!("# vectorix-rates {CSV_VERSION}\nscheme,strategy,mean_mbps,min_mbps,failed_tones");
        for i in 0..self.lines {
            write!(s, ",line{i}_mbps").unwrap();
        }
        s.push('\n');
        for r in &self.rows {
            write!(s, "{},{},{:.1},{:.1},{}", r.scheme, r.strategy, r.mean_mbps, r.min_mbps, r.failed_tones).unwrap();
            for v in &r.line_mbps {
                write!(s, ",{v:.1}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rate table serializes") + "\n"
    }

    /// Plot data: one row per line, one column per scheme.
    pub fn per_line_csv(&self) -> String {
        let mut s = format!("# vectorix-rates-per-line {CSV_VERSION}\nline");
        for r in &self.rows {
            write!(s, ",{}", r.scheme).unwrap();
        }
        s.push('\n');
        for i in 0..self.lines {
            write!(s, "{i}").unwrap();
            for r in &self.rows {
                write!(s, ",{:.1}", r.line_mbps[i]).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Full-precision reports for every configured scheme.
pub fn rate_reports(set: &ChannelSet, schemes: &[SchemeId], gap: &GapParams) -> Result<Vec<RateReport>> {
    schemes.iter().map(|s| evaluate_scheme(set, s, gap)).collect()
}

pub fn cmd_rates(config: &RunConfig, formats: OutputFormats) -> Result<RateTable> {
    config.validate()?;
    let set = config.channel_set()?;
    let reports = rate_reports(&set, &config.scheme_list()?, &config.gap_params())?;
    let table = RateTable::from_reports(set.lines(), &reports);
    if formats.csv {
        write_file(&config.out, "rates.csv", &table.to_csv())?;
        write_file(&config.out, "rates_per_line.csv", &table.per_line_csv())?;
    }
    if formats.json {
        write_file(&config.out, "rates.json", &table.to_json())?;
    }
    Ok(table)
}

/// The two sharing directions: DO on the low band then IVB, and the reverse.
pub const SWEEP_VARIANTS: [(&str, OrderingStrategy, OrderingStrategy); 2] = [
    ("DO-IVB", OrderingStrategy::Do, OrderingStrategy::Ivb),
    ("IVB-DO", OrderingStrategy::Ivb, OrderingStrategy::Do),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub variant: String,
    pub b_do_hz: f64,
    pub report: RateReport,
}

pub fn sweep_reports(set: &ChannelSet, grid: &[f64], gap: &GapParams) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(grid.len() * SWEEP_VARIANTS.len());
    for (variant, low, high) in &SWEEP_VARIANTS {
        for &b_do in grid {
            let scheme = SchemeId::ThpOrdered(OrderingStrategy::freq_share(low.clone(), high.clone(), b_do));
            out.push(SweepPoint {
                variant: (*variant).into(),
                b_do_hz: b_do,
                report: evaluate_scheme(set, &scheme, gap)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variant: String,
    pub b_do_hz: f64,
    pub mean_mbps: f64,
    pub min_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub version: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn from_points(points: &[SweepPoint]) -> Self {
        Self {
            version: CSV_VERSION.into(),
            rows: points
                .iter()
                .map(|p| SweepRow {
                    variant: p.variant.clone(),
                    b_do_hz: p.b_do_hz,
                    mean_mbps: round1(p.report.mean_mbps),
                    min_mbps: round1(p.report.min_mbps),
                })
                .collect(),
        }
    }

    /// `variant,b_do_hz,mean_mbps,min_mbps`
    pub fn to_csv(&self) -> String {
        let mut s = format!("# vectorix-sweep-bdo {CSV_VERSION}\nvariant,b_do_hz,mean_mbps,min_mbps\n");
        for r in &self.rows {
            writeln!(s, "{},{},{:.1},{:.1}", r.variant, r.b_do_hz, r.mean_mbps, r.min_mbps).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep table serializes") + "\n"
    }
}

pub fn cmd_sweep_bdo(config: &RunConfig, formats: OutputFormats) -> Result<SweepTable> {
    config.validate()?;
    let set = config.channel_set()?;
    let grid = config.bdo_grid_for(set.plan());
    let table = SweepTable::from_points(&sweep_reports(&set, &grid, &config.gap_params())?);
    if formats.csv {
        write_file(&config.out, "sweep_bdo.csv", &table.to_csv())?;
    }
    if formats.json {
        write_file(&config.out, "sweep_bdo.json", &table.to_json())?;
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail).unwrap();
        }
        s
    }
}

/// Test hooks for the verification command.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerifyHooks {
    /// Added to `F[0][0]` of every built precoder before the ZF check.
    pub perturb_feedforward: Option<f64>,
}

fn zf_check(set: &ChannelSet, scheme: &SchemeId, gap: &GapParams, hooks: &VerifyHooks) -> Result<Check> {
    let plan = scheme_orderings(set, scheme, gap)?;
    let residuals: Vec<Option<f64>> = (0..set.tone_count())
        .into_par_iter()
        .map(|k| {
            let mut blocks = build_scheme_blocks(set.tone(k), scheme, &plan.perms[k]).ok()?;
            if let Some(eps) = hooks.perturb_feedforward {
                blocks.f[(0, 0)] += eps;
            }
            verify_zf(&blocks, set.tone(k)).ok()
        })
        .collect();
    let built = residuals.iter().flatten().count();
    let worst = residuals.iter().flatten().copied().fold(0.0, f64::max);
    Ok(Check {
        name: format!("zf-residual {}", scheme.label()),
        passed: worst < ZF_LIMIT,
        detail: format!("max {worst:.3e} over {built} tones (limit {ZF_LIMIT:e})"),
    })
}

/// Oracle comparisons on seeded Gaussian `n × n` matrices.
fn ordering_oracle_checks(n: usize, trials: u64, seed: u64) -> Result<Vec<Check>> {
    let mut dominated = 0;
    let mut agree = 0;
    let mut pivot_ok = 0;
    for t in 0..trials {
        let a = gaussian_matrix(n, seed.wrapping_add(t));
        let sorted = sorted_qr(&a)?;
        let best = forced_order_qr(&a, &exhaustive_maxmin_order(&a)?)?;
        let (s, b) = (sorted.min_r_sqr(), best.min_r_sqr());
        if b >= s * (1.0 - 1e-12) {
            dominated += 1;
        }
        if (b - s).abs() <= 1e-12 * b {
            agree += 1;
        }
        let max_col = (0..n).map(|j| a.column_norm(j).powi(2)).fold(0.0, f64::max);
        let r11 = pivoted_qr(&a)?.r_diag_sqr()[0];
        if (r11 - max_col).abs() <= 1e-12 * max_col {
            pivot_ok += 1;
        }
    }
    Ok(vec![
        Check {
            name: format!("maxmin-oracle L={n}"),
            passed: dominated == trials,
            detail: format!(
                "exhaustive >= sorted in {dominated}/{trials}; sorted optimal in {agree}/{trials} ({:.1}%)",
                100.0 * agree as f64 / trials as f64
            ),
        },
        Check {
            name: format!("pivot-oracle L={n}"),
            passed: pivot_ok == trials,
            detail: format!("first pivot is the largest column in {pivot_ok}/{trials}"),
        },
    ])
}

pub fn cmd_verify(config: &RunConfig, hooks: &VerifyHooks) -> Result<VerifyReport> {
    config.validate()?;
    let set = config.channel_set()?;
    let gap = config.gap_params();
    let tones: Vec<usize> = (0..set.tone_count()).step_by(config.verify_tone_stride).collect();
    let mut checks = Vec::new();
    for scheme in config.scheme_list()? {
        checks.push(zf_check(&set, &scheme, &gap, hooks)?);
        let e2e = verify_e2e(&set, &scheme, &gap, config.verify_symbols, config.seed, NoiseMode::Free, Some(&tones))?;
        checks.push(Check {
            name: format!("noise-free-e2e {}", scheme.label()),
            passed: e2e.total_errors() == 0,
            detail: format!(
                "{} symbol errors over {} tones x {} symbols",
                e2e.total_errors(),
                e2e.tones,
                e2e.symbols_per_tone
            ),
        });
        let (line, worst) = e2e
            .mean_tx_power
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |best, (i, p)| if p > best.1 { (i, p) } else { best });
        let limit = POWER_LIMIT + 3.0 * e2e.mean_tx_power_stderr[line];
        checks.push(Check {
            name: format!("tx-power {}", scheme.label()),
            passed: e2e.mean_tx_power.iter().zip(&e2e.mean_tx_power_stderr).all(|(p, se)| *p <= POWER_LIMIT + 3.0 * se),
            detail: format!("largest per-line mean power {worst:.4} on line {line} (limit {limit:.4})"),
        });
    }
    for n in [3, 4] {
        checks.extend(ordering_oracle_checks(n, 100, config.seed)?);
    }
    let report = VerifyReport { checks };
    write_file(&config.out, "verify.txt", &report.to_text())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakestHistogram {
    pub version: String,
    pub counts: Vec<usize>,
}

impl WeakestHistogram {
    /// `line,count`
    pub fn to_csv(&self) -> String {
        let mut s = format!("# vectorix-weakest-line {CSV_VERSION}\nline,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(s, "{i},{c}").unwrap();
        }
        s
    }
}

pub fn cmd_hist_weakest(config: &RunConfig, formats: OutputFormats) -> Result<WeakestHistogram> {
    config.validate()?;
    let set = config.channel_set()?;
    let hist = WeakestHistogram {
        version: CSV_VERSION.into(),
        counts: weakest_line_histogram(&set),
    };
    if formats.csv {
        write_file(&config.out, "weakest_line.csv", &hist.to_csv())?;
    }
    if formats.json {
        let json = serde_json::to_string_pretty(&hist).expect("histogram serializes") + "\n";
        write_file(&config.out, "weakest_line.json", &json)?;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_one_decimal() {
        assert_eq!(round1(906.94), 906.9);
        assert_eq!(round1(906.96), 907.0);
    }

    #[test]
    fn rate_csv_layout() {
        let table = RateTable {
            version: CSV_VERSION.into(),
            lines: 2,
            rows: vec![RateRow {
                scheme: "THP".into(),
                strategy: "ID".into(),
                mean_mbps: 1.5,
                min_mbps: 1.0,
                line_mbps: vec![1.0, 2.0],
                failed_tones: 0,
            }],
        };
        assert_eq!(
            table.to_csv(),
            "# vectorix-rates v1\nscheme,strategy,mean_mbps,min_mbps,failed_tones,line0_mbps,line1_mbps\nTHP,ID,1.5,1.0,0,1.0,2.0\n"
        );
        assert_eq!(table.per_line_csv(), "# vectorix-rates-per-line v1\nline,THP\n0,1.0\n1,2.0\n");
    }

    #[test]
    fn oracle_checks_pass_on_gaussian_matrices() {
        let checks = ordering_oracle_checks(3, 20, 5).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }
}
