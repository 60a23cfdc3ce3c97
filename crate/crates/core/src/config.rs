//! Run configuration shared by the command front end. Every field has a
//! default, so an empty JSON object (or no file at all) gives the standard
//! 2.1-212 MHz, 8-line setting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bitloading::GapParams;
use crate::channel::{generate_synthetic, load_channel, ChannelSet, SyntheticCableSpec, TonePlan};
use crate::error::{Error, Result};
use crate::ordering::OrderingStrategy;
use crate::precoding::SchemeId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Channel file; the synthetic cable is used when absent.
    pub channel: Option<PathBuf>,
    pub lines: usize,
    pub cable_length_m: f64,
    pub direct_atten_coeff: f64,
    pub fext_slope: f64,
    pub fext_asymmetry_spread: f64,
    /// Seeds the synthetic cable and the Monte Carlo streams.
    pub seed: u64,
    pub band_start_hz: f64,
    pub band_end_hz: f64,
    pub tone_spacing_hz: f64,
    pub tx_psd_dbm_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub shannon_gap_db: f64,
    pub margin_db: f64,
    pub coding_gain_db: f64,
    pub b_min: u8,
    pub b_max: u8,
    pub framing_overhead: f64,
    /// Scheme labels such as `THP-DO` or `ER-THP-LRVB`.
    pub schemes: Vec<String>,
    /// Extra ordered-THP rows, e.g. `DO-IVB@50e6`.
    pub orderings: Vec<String>,
    /// Sharing bandwidths (Hz) for the sweep; empty means 10 MHz steps
    /// plus the full band.
    pub bdo_grid: Vec<f64>,
    pub out: PathBuf,
    /// Symbols per tone in the end-to-end check.
    pub verify_symbols: usize,
    /// Every n-th tone enters the end-to-end check.
    pub verify_tone_stride: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cable = SyntheticCableSpec::default();
        let gap = GapParams::default();
        Self {
            channel: None,
            lines: cable.lines,
            cable_length_m: cable.length_m,
            direct_atten_coeff: cable.direct_atten_coeff,
            fext_slope: cable.fext_slope,
            fext_asymmetry_spread: cable.fext_asymmetry_spread,
            seed: cable.seed,
            band_start_hz: 2.1e6,
            band_end_hz: 212e6,
            tone_spacing_hz: 51.75e3,
            tx_psd_dbm_hz: -76.0,
            noise_psd_dbm_hz: -140.0,
            shannon_gap_db: gap.shannon_gap_db,
            margin_db: gap.margin_db,
            coding_gain_db: gap.coding_gain_db,
            b_min: gap.b_min,
            b_max: gap.b_max,
            framing_overhead: gap.framing_overhead,
            schemes: SchemeId::standard_set().iter().map(SchemeId::label).collect(),
            orderings: Vec::new(),
            bdo_grid: Vec::new(),
            out: PathBuf::from("out"),
            verify_symbols: 1000,
            verify_tone_stride: 16,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn gap_params(&self) -> GapParams {
        GapParams {
            shannon_gap_db: self.shannon_gap_db,
            margin_db: self.margin_db,
            coding_gain_db: self.coding_gain_db,
            b_min: self.b_min,
            b_max: self.b_max,
            gamma_base_db: self.tx_psd_dbm_hz - self.noise_psd_dbm_hz,
            framing_overhead: self.framing_overhead,
        }
    }

    pub fn tone_plan(&self) -> Result<TonePlan> {
        TonePlan::from_band(self.band_start_hz, self.band_end_hz, self.tone_spacing_hz)
    }

    pub fn cable_spec(&self) -> SyntheticCableSpec {
        SyntheticCableSpec {
            lines: self.lines,
            length_m: self.cable_length_m,
            seed: self.seed,
            direct_atten_coeff: self.direct_atten_coeff,
            fext_slope: self.fext_slope,
            fext_asymmetry_spread: self.fext_asymmetry_spread,
        }
    }

    /// The channel file if one is configured, the synthetic cable otherwise.
    pub fn channel_set(&self) -> Result<ChannelSet> {
        match &self.channel {
            Some(path) => load_channel(path),
            None => generate_synthetic(&self.cable_spec(), &self.tone_plan()?),
        }
    }

    /// Configured schemes followed by one ordered-THP row per extra ordering.
    pub fn scheme_list(&self) -> Result<Vec<SchemeId>> {
        let mut out = self
            .schemes
            .iter()
            .map(|s| SchemeId::parse(s))
            .collect::<Result<Vec<_>>>()?;
        for o in &self.orderings {
            out.push(SchemeId::ThpOrdered(OrderingStrategy::parse(o)?));
        }
        if out.is_empty() {
            return Err(Error::invalid("no schemes selected"));
        }
        Ok(out)
    }

    pub fn bdo_grid_for(&self, plan: &TonePlan) -> Vec<f64> {
        if !self.bdo_grid.is_empty() {
            return self.bdo_grid.clone();
        }
        let full = plan.bandwidth();
        let mut grid: Vec<f64> = (0..).map(|i| i as f64 * 10e6).take_while(|&b| b < full).collect();
        grid.push(full);
        grid
    }

    pub fn validate(&self) -> Result<()> {
        self.gap_params().validate()?;
        if self.channel.is_none() {
            self.cable_spec().validate()?;
        }
        if self.verify_tone_stride == 0 {
            return Err(Error::invalid("verify tone stride must be at least 1"));
        }
        if let Some(b) = self.bdo_grid.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::invalid(format!("sharing bandwidth {b} must be >= 0")));
        }
        self.scheme_list().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_standard_setting() {
        let c = RunConfig::default();
        let gap = c.gap_params();
        assert_eq!(gap.gamma_base_db, 64.0);
        assert!((gap.gap_db() - 10.8).abs() < 1e-12);
        assert_eq!((gap.b_min, gap.b_max), (2, 12));
        assert_eq!(gap.framing_overhead, 0.12);
        assert_eq!(c.tone_plan().unwrap().count, 4057);
        assert_eq!(c.scheme_list().unwrap().len(), 9);
        c.validate().unwrap();
    }

    #[test]
    fn empty_json_is_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn json_overrides_and_rejects_unknown_keys() {
        let c = RunConfig::from_json(r#"{"lines": 4, "orderings": ["DO-IVB@50e6"]}"#).unwrap();
        assert_eq!(c.lines, 4);
        assert_eq!(c.scheme_list().unwrap().last().unwrap().label(), "THP-DO-IVB@50000000");
        assert!(RunConfig::from_json(r#"{"lnes": 4}"#).is_err());
    }

    #[test]
    fn default_grid_ends_at_full_band() {
        let c = RunConfig::default();
        let plan = c.tone_plan().unwrap();
        let grid = c.bdo_grid_for(&plan);
        assert_eq!(grid[0], 0.0);
        assert_eq!(*grid.last().unwrap(), plan.bandwidth());
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }
}
