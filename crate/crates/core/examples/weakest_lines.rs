//! How often each line is the weakest-first pick across the band.

use vectorix::channel::{generate_synthetic, weakest_line_histogram, SyntheticCableSpec, TonePlan};

fn main() -> vectorix::Result<()> {
    let plan = TonePlan::from_band(2.1e6, 212e6, 51.75e3)?;
    let set = generate_synthetic(&SyntheticCableSpec::default(), &plan)?;
    let tones = set.tone_count();
    for (line, &count) in weakest_line_histogram(&set).iter().enumerate() {
        println!("line {line}: {count:>5} {}", "#".repeat(count * 50 / tones));
    }
    Ok(())
}
