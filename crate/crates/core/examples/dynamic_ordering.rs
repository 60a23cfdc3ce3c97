//! Dynamic Ordering balances accumulated bits across lines.

use vectorix::bitloading::GapParams;
use vectorix::channel::{generate_synthetic, SyntheticCableSpec, TonePlan};
use vectorix::ordering::do_plan;

fn main() -> vectorix::Result<()> {
    let spec = SyntheticCableSpec { lines: 4, ..Default::default() };
    let plan = TonePlan::from_band(100e6, 140e6, 51.75e3)?;
    let set = generate_synthetic(&spec, &plan)?;
    let (orders, bits) = do_plan(&set, &GapParams::default());

    for t in 0..5 {
        let agg = orders.aggregates[t].as_ref().map(|a| format!("{a:?}")).unwrap_or_default();
        println!("tone {t}: order {}  aggregates before {agg}", orders.perms[t]);
    }
    for (line, b) in bits.iter().enumerate() {
        println!("line {line}: {} bits", b.iter().map(|&x| x as u64).sum::<u64>());
    }
    Ok(())
}
