//! DO below the sharing frequency, inverse V-BLAST above, for a few
//! sharing bandwidths.

use vectorix::bitloading::{evaluate_scheme, GapParams};
use vectorix::channel::{generate_synthetic, SyntheticCableSpec, TonePlan};
use vectorix::ordering::OrderingStrategy;
use vectorix::precoding::SchemeId;

fn main() -> vectorix::Result<()> {
    let spec = SyntheticCableSpec { lines: 4, ..Default::default() };
    let plan = TonePlan::from_band(2.1e6, 106e6, 51.75e3)?;
    let set = generate_synthetic(&spec, &plan)?;
    let gap = GapParams::default();

    for b_do in [0.0, 25e6, 50e6, 75e6, plan.bandwidth()] {
        let strategy = OrderingStrategy::freq_share(OrderingStrategy::Do, OrderingStrategy::Ivb, b_do);
        let r = evaluate_scheme(&set, &SchemeId::ThpOrdered(strategy), &gap)?;
        println!("b_do {:>6.1} MHz  mean {:>7.1}  min {:>7.1}", b_do / 1e6, r.mean_mbps, r.min_mbps);
    }
    Ok(())
}
