//! Per-tone channel matrices: text file format, a deterministic synthetic
//! cable generator and simple diagnostics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sorted_qr, CMatrix, C64};
use crate::rng;

pub const FILE_MAGIC: &str = "vectorix-channel v1";

/// Equally spaced DMT tones: tone `k` sits at `f_start + k * delta_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TonePlan {
    pub f_start: f64,
    pub delta_f: f64,
    pub count: usize,
}

impl TonePlan {
    pub fn new(f_start: f64, delta_f: f64, count: usize) -> Result<Self> {
        if !(f_start > 0.0 && f_start.is_finite()) {
            return Err(Error::invalid(format!("f_start must be positive, got {f_start}")));
        }
        if !(delta_f > 0.0 && delta_f.is_finite()) {
            return Err(Error::invalid(format!("delta_f must be positive, got {delta_f}")));
        }
        if count == 0 {
            return Err(Error::invalid("tone count must be at least 1"));
        }
        Ok(Self {
            f_start,
            delta_f,
            count,
        })
    }

    /// All tones from `band_start` up to and including `band_end`.
    pub fn from_band(band_start: f64, band_end: f64, delta_f: f64) -> Result<Self> {
        if band_end < band_start {
            return Err(Error::invalid("band end below band start"));
        }
        let count = ((band_end - band_start) / delta_f + 1e-9).floor() as usize + 1;
        Self::new(band_start, delta_f, count)
    }

    pub fn frequency(&self, tone: usize) -> f64 {
        self.f_start + tone as f64 * self.delta_f
    }

    /// Bandwidth covered by the plan, `count * delta_f`.
    pub fn bandwidth(&self) -> f64 {
        self.count as f64 * self.delta_f
    }
}

/// One `L × L` channel matrix per tone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    plan: TonePlan,
    lines: usize,
    tones: Vec<CMatrix>,
}

impl ChannelSet {
    pub fn new(plan: TonePlan, tones: Vec<CMatrix>) -> Result<Self> {
        if tones.len() != plan.count {
            return Err(Error::DimensionMismatch {
                expected: format!("{} tones", plan.count),
                got: format!("{} tones", tones.len()),
            });
        }
        let lines = tones[0].rows();
        if let Some(k) = tones.iter().position(|h| h.rows() != lines || h.cols() != lines) {
            return Err(Error::DimensionMismatch {
                expected: format!("{lines}x{lines} at every tone"),
                got: format!("{}x{} at tone {k}", tones[k].rows(), tones[k].cols()),
            });
        }
        Ok(Self { plan, lines, tones })
    }

    /// Same matrix on every tone.
    pub fn uniform(plan: TonePlan, h: CMatrix) -> Result<Self> {
        Self::new(plan, vec![h; plan.count])
    }

    pub fn plan(&self) -> &TonePlan {
        &self.plan
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn tone_count(&self) -> usize {
        self.tones.len()
    }

    pub fn tone(&self, k: usize) -> &CMatrix {
        &self.tones[k]
    }

    pub fn tones(&self) -> &[CMatrix] {
        &self.tones
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.plan.frequency(k)
    }

    /// Restrict to the tones in `range`, keeping their absolute frequencies.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.is_empty() || range.end > self.tones.len() {
            return Err(Error::invalid(format!("tone range {range:?} out of bounds")));
        }
        let plan = TonePlan::new(self.plan.frequency(range.start), self.plan.delta_f, range.len())?;
        Self::new(plan, self.tones[range].to_vec())
    }
}

/// Text serialization: a header line followed by one CSV row
/// `tone,rx_line,tx_line,re,im` per entry (0-based indices).
pub fn write_channel(set: &ChannelSet) -> String {
    let l = set.lines;
    let mut out = String::with_capacity(set.tone_count() * l * l * 56 + 96);
    writeln!(
        out,
        "# {FILE_MAGIC}, L={l}, f_start={}, delta_f={}, count={}",
        set.plan.f_start, set.plan.delta_f, set.plan.count
    )
    .unwrap();
    for (k, h) in set.tones.iter().enumerate() {
        for i in 0..l {
            for j in 0..l {
                let z = h[(i, j)];
                writeln!(out, "{k},{i},{j},{:.16e},{:.16e}", z.re, z.im).unwrap();
            }
        }
    }
    out
}

pub fn save_channel(set: &ChannelSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_channel(set))?;
    Ok(())
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<ChannelSet> {
    parse_channel(&fs::read_to_string(path)?)
}

fn parse_header(line: &str) -> Result<(usize, TonePlan)> {
    let err = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    let body = line
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix(FILE_MAGIC))
        .ok_or_else(|| err("missing `# vectorix-channel v1` header"))?;
    let (mut lines, mut f_start, mut delta_f, mut count) = (None, None, None, None);
    for field in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = field.split_once('=').ok_or_else(|| err("malformed header field"))?;
        let bad = || err(&format!("bad value for `{key}`"));
        match key.trim() {
            "L" => lines = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
            "f_start" => f_start = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
            "delta_f" => delta_f = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
            "count" => count = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
            other => return Err(err(&format!("unknown header key `{other}`"))),
        }
    }
    let (Some(l), Some(fs), Some(df), Some(n)) = (lines, f_start, delta_f, count) else {
        return Err(err("header must define L, f_start, delta_f and count"));
    };
    if l == 0 {
        return Err(err("L must be positive"));
    }
    let plan = TonePlan::new(fs, df, n).map_err(|e| err(&e.to_string()))?;
    Ok((l, plan))
}

pub fn parse_channel(text: &str) -> Result<ChannelSet> {
    let mut rows = text.lines().enumerate();
    let (_, header) = rows.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let (l, plan) = parse_header(header)?;
    let mut entries: Vec<Option<C64>> = vec![None; plan.count * l * l];
    for (idx, raw) in rows {
        let line_no = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(perr(format!("expected 5 fields, found {}", fields.len())));
        }
        let index = |s: &str, name: &str, bound: usize| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| perr(format!("bad {name} `{s}`")))?;
            if v >= bound {
                return Err(perr(format!("{name} {v} out of range (< {bound})")));
            }
            Ok(v)
        };
        let k = index(fields[0], "tone index", plan.count)?;
        let i = index(fields[1], "rx line", l)?;
        let j = index(fields[2], "tx line", l)?;
        let re: f64 = fields[3].parse().map_err(|_| perr(format!("bad real part `{}`", fields[3])))?;
        let im: f64 = fields[4].parse().map_err(|_| perr(format!("bad imaginary part `{}`", fields[4])))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(perr("non-finite entry".into()));
        }
        let slot = &mut entries[(k * l + i) * l + j];
        if slot.is_some() {
            return Err(perr(format!("duplicate entry ({k},{i},{j})")));
        }
        *slot = Some(C64::new(re, im));
    }
    if let Some(missing) = entries.iter().position(Option::is_none) {
        let (k, rest) = (missing / (l * l), missing % (l * l));
        return Err(Error::DimensionMismatch {
            expected: format!("all {} entries per tone", l * l),
            got: format!("missing entry ({k},{},{})", rest / l, rest % l),
        });
    }
    let tones = entries
        .chunks(l * l)
        .map(|c| CMatrix::new(l, l, c.iter().map(|z| z.unwrap()).collect()))
        .collect::<Result<Vec<_>>>()?;
    ChannelSet::new(plan, tones)
}

/// Parameters of the synthetic cable model.
///
/// ```text
/// |h_ii(f)| = 10^(-direct_atten_coeff * sqrt(f) * length_m / 20)
///  h_ij(f)  = chi_ij * fext_slope * f * |h_ii(f)| * exp(j phi)
/// chi_ij    = 10^(fext_asymmetry_spread * N_ij / 20),  N_ij ~ N(0, 1)
/// ```
///
/// `chi_ij` is drawn once per ordered pair, so a line that couples strongly
/// does so over the whole band. Phases are independent per tone and entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCableSpec {
    pub lines: usize,
    pub length_m: f64,
    pub seed: u64,
    /// dB per sqrt(Hz) per meter.
    pub direct_atten_coeff: f64,
    /// Crosstalk-to-direct amplitude ratio growth per Hz.
    pub fext_slope: f64,
    /// Standard deviation (dB) of the log-normal pair coupling.
    pub fext_asymmetry_spread: f64,
}

impl Default for SyntheticCableSpec {
    fn default() -> Self {
        Self {
            lines: 8,
            length_m: 100.0,
            seed: 2015,
            direct_atten_coeff: 4.0e-5,
            fext_slope: 4.5e-9,
            fext_asymmetry_spread: 6.0,
        }
    }
}

impl SyntheticCableSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lines < 2 {
            return Err(Error::invalid("synthetic cable needs at least 2 lines"));
        }
        if !(self.length_m > 0.0) {
            return Err(Error::invalid("cable length must be positive"));
        }
        if !(self.direct_atten_coeff >= 0.0 && self.fext_slope >= 0.0 && self.fext_asymmetry_spread >= 0.0) {
            return Err(Error::invalid("cable coefficients must be non-negative"));
        }
        Ok(())
    }

    /// Log-normal pair couplings `chi_ij` (diagonal entries are unused).
    pub fn pair_couplings(&self) -> Vec<Vec<f64>> {
        let l = self.lines;
        (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| {
                        let n = rng::standard_normal(self.seed, (i * l + j) as u64);
                        10f64.powf(self.fext_asymmetry_spread * n / 20.0)
                    })
                    .collect()
            })
            .collect()
    }
}

const PHASE_SALT: u64 = 0x5048_4153_4553_0001;

pub fn generate_synthetic(spec: &SyntheticCableSpec, plan: &TonePlan) -> Result<ChannelSet> {
    spec.validate()?;
    let l = spec.lines;
    let chi = spec.pair_couplings();
    let phase_seed = spec.seed ^ PHASE_SALT;
    let tones = (0..plan.count)
        .map(|k| {
            let f = plan.frequency(k);
            let direct = 10f64.powf(-spec.direct_atten_coeff * f.sqrt() * spec.length_m / 20.0);
            CMatrix::from_fn(l, l, |i, j| {
                let counter = ((k * l + i) * l + j) as u64;
                let phase = 2.0 * std::f64::consts::PI * rng::uniform(phase_seed, counter);
                let mag = if i == j {
                    direct
                } else {
                    chi[i][j] * spec.fext_slope * f * direct
                };
                C64::from_polar(mag, phase)
            })
        })
        .collect();
    ChannelSet::new(*plan, tones)
}

/// `min_i |h_ii|² / max_{j≠i} |h_ij|²`; above 1 the matrix is diagonally
/// dominant. Infinite when there is no crosstalk.
pub fn diagonal_dominance(h: &CMatrix) -> f64 {
    let l = h.rows();
    (0..l)
        .map(|i| {
            let worst = (0..l)
                .filter(|&j| j != i)
                .map(|j| h[(i, j)].norm_sqr())
                .fold(0.0, f64::max);
            if worst == 0.0 {
                f64::INFINITY
            } else {
                h[(i, i)].norm_sqr() / worst
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Per-line count of tones on which the line is the first one picked by the
/// sorted ("weakest first") QR of `Hᴴ`.
pub fn weakest_line_histogram(set: &ChannelSet) -> Vec<usize> {
    let mut counts = vec![0; set.lines()];
    for h in set.tones() {
        let hh = h.adjoint();
        let first = match sorted_qr(&hh) {
            Ok(f) => f.perm[0],
            // first pick only needs column norms
            Err(_) => (0..hh.cols())
                .min_by(|&a, &b| hh.column_norm(a).total_cmp(&hh.column_norm(b)))
                .unwrap(),
        };
        counts[first] += 1;
    }
    counts
}

/// Matrix with i.i.d. unit-variance circular complex Gaussian entries.
pub fn gaussian_matrix(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re * s, im * s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> TonePlan {
        TonePlan::new(2.1e6, 51_750.0, 3).unwrap()
    }

    #[test]
    fn tone_plan_validation() {
        assert!(TonePlan::new(0.0, 1.0, 1).is_err());
        assert!(TonePlan::new(1.0, 0.0, 1).is_err());
        assert!(TonePlan::new(1.0, 1.0, 0).is_err());
        let p = TonePlan::from_band(2.1e6, 212e6, 51_750.0).unwrap();
        assert_eq!(p.count, 4057);
        assert!(p.frequency(p.count - 1) <= 212e6);
    }

    #[test]
    fn identity_file_parses() {
        let text = "# vectorix-channel v1, L=2, f_start=1000, delta_f=10, count=1\n\
                    0,0,0,1,0\n0,0,1,0,0\n0,1,0,0,0\n0,1,1,1,0\n";
        let set = parse_channel(text).unwrap();
        assert_eq!(set.tone(0), &CMatrix::identity(2));
        assert_eq!(set.plan().f_start, 1000.0);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = "# vectorix-channel v1, L=1, f_start=1000, delta_f=10, count=1\n0,0,0,1\n";
        match parse_channel(text) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("5 fields"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_entry_is_a_dimension_error() {
        let text = "# vectorix-channel v1, L=2, f_start=1000, delta_f=10, count=1\n0,0,0,1,0\n";
        assert!(matches!(parse_channel(text), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn duplicate_entry_is_rejected() {
        let text = "# vectorix-channel v1, L=1, f_start=1000, delta_f=10, count=1\n0,0,0,1,0\n0,0,0,1,0\n";
        assert!(matches!(parse_channel(text), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(matches!(parse_channel("0,0,0,1,0\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn synthetic_round_trip_is_exact() {
        let spec = SyntheticCableSpec {
            lines: 3,
            ..Default::default()
        };
        let set = generate_synthetic(&spec, &small_plan()).unwrap();
        assert_eq!(parse_channel(&write_channel(&set)).unwrap(), set);
    }

    #[test]
    fn no_fext_limit_is_diagonal() {
        let spec = SyntheticCableSpec {
            fext_slope: 0.0,
            fext_asymmetry_spread: 0.0,
            ..Default::default()
        };
        let set = generate_synthetic(&spec, &small_plan()).unwrap();
        for h in set.tones() {
            assert!(h.is_diagonal(0.0));
            assert_eq!(diagonal_dominance(h), f64::INFINITY);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticCableSpec::default();
        let a = generate_synthetic(&spec, &small_plan()).unwrap();
        let b = generate_synthetic(&spec, &small_plan()).unwrap();
        assert_eq!(a, b);
        let other = generate_synthetic(&SyntheticCableSpec { seed: 1, ..spec }, &small_plan()).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn default_cable_loses_dominance_with_frequency() {
        let spec = SyntheticCableSpec::default();
        let plan = TonePlan::new(5e6, 95e6, 2).unwrap();
        let set = generate_synthetic(&spec, &plan).unwrap();
        assert!(diagonal_dominance(set.tone(0)) > 1.0);
        assert!(diagonal_dominance(set.tone(1)) <= 1.0);
    }

    #[test]
    fn dominance_formula() {
        assert_eq!(diagonal_dominance(&CMatrix::identity(3)), f64::INFINITY);
        assert_eq!(diagonal_dominance(&CMatrix::identity(1)), f64::INFINITY);
        let h = CMatrix::from_real_rows(&[&[2.0, 1.0, 1.0], &[1.0, 2.0, 1.0], &[1.0, 1.0, 2.0]]).unwrap();
        assert_eq!(diagonal_dominance(&h), 4.0);
    }

    #[test]
    fn histogram_counts_weak_direct_line() {
        let h = CMatrix::from_real_diag(&[0.1, 1.0, 2.0]);
        let set = ChannelSet::uniform(small_plan(), h).unwrap();
        assert_eq!(weakest_line_histogram(&set), vec![3, 0, 0]);
    }
}
