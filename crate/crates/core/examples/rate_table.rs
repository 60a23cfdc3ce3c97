//! Mean and minimum rates of every scheme on a 4-line cable.

use vectorix::commands::{rate_reports, RateTable};
use vectorix::config::RunConfig;

fn main() -> vectorix::Result<()> {
    let config = RunConfig {
        lines: 4,
        band_end_hz: 106e6,
        ..Default::default()
    };
    let set = config.channel_set()?;
    let reports = rate_reports(&set, &config.scheme_list()?, &config.gap_params())?;
    print!("{}", RateTable::from_reports(set.lines(), &reports).to_csv());
    Ok(())
}
