//! Modulo thresholds and power increase per constellation size.

use vectorix::precoding::{delta_e_for_bits, grid_points, tau_for_bits};

fn main() -> vectorix::Result<()> {
    println!("{:>3} {:>6} {:>8} {:>9}", "b", "M'", "tau", "dE [dB]");
    for b in 1..=12u8 {
        println!(
            "{b:>3} {:>6} {:>8.4} {:>9.4}",
            grid_points(b)?,
            tau_for_bits(b)?,
            delta_e_for_bits(b)?
        );
    }
    Ok(())
}
