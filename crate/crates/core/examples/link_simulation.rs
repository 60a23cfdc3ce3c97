//! Monte Carlo run of ordered THP on one tone with and without noise.

use vectorix::bitloading::{blocks_bits, GapParams};
use vectorix::channel::{generate_synthetic, SyntheticCableSpec, TonePlan};
use vectorix::linksim::run_link;
use vectorix::ordering::vb_order;
use vectorix::precoding::build_ordered_thp;

fn main() -> vectorix::Result<()> {
    let plan = TonePlan::new(60e6, 51.75e3, 1)?;
    let set = generate_synthetic(&SyntheticCableSpec::default(), &plan)?;
    let h = set.tone(0);
    let gap = GapParams::default();

    let blocks = build_ordered_thp(h, &vb_order(h)?)?;
    let bits = blocks_bits(&blocks, &gap);
    println!("bits per line {bits:?}");

    for (label, noise) in [("noise-free", 0.0), ("baseline noise", 1.0 / gap.gamma_base())] {
        let r = run_link(h, &blocks, &bits, 20_000, noise, 1)?;
        let power: Vec<String> = r.tx_power.iter().map(|p| format!("{p:.3}")).collect();
        println!("{label}: {} symbol errors, tx power [{}]", r.total_errors(), power.join(", "));
    }
    Ok(())
}
