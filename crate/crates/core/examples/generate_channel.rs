//! Build the synthetic cable, save it and read it back.

use vectorix::channel::{diagonal_dominance, generate_synthetic, load_channel, save_channel, SyntheticCableSpec, TonePlan};

fn main() -> vectorix::Result<()> {
    let spec = SyntheticCableSpec { lines: 4, ..Default::default() };
    let plan = TonePlan::from_band(2.1e6, 106e6, 51.75e3)?;
    let set = generate_synthetic(&spec, &plan)?;

    let path = std::env::temp_dir().join("vectorix_example_channel.txt");
    save_channel(&set, &path)?;
    let back = load_channel(&path)?;
    println!("{} lines, {} tones -> {}", back.lines(), back.tone_count(), path.display());

    for k in (0..set.tone_count()).step_by(400) {
        println!("{:>8.2} MHz  dominance {:>10.3}", set.frequency(k) / 1e6, diagonal_dominance(set.tone(k)));
    }
    Ok(())
}
