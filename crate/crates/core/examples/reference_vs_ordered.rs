//! Per-line SNR of THP in natural order against the weakest-first order on
//! one crosstalk-heavy tone.

use vectorix::bitloading::GapParams;
use vectorix::channel::{generate_synthetic, SyntheticCableSpec, TonePlan};
use vectorix::ordering::vb_order;
use vectorix::precoding::{build_ordered_thp, build_reference_thp, snr_profile, verify_zf};

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn main() -> vectorix::Result<()> {
    let plan = TonePlan::new(150e6, 51.75e3, 1)?;
    let set = generate_synthetic(&SyntheticCableSpec::default(), &plan)?;
    let h = set.tone(0);
    let gamma_base = GapParams::default().gamma_base();

    let reference = build_reference_thp(h)?;
    let order = vb_order(h)?;
    let ordered = build_ordered_thp(h, &order)?;
    println!("order {order}, ZF residual {:.1e} / {:.1e}", verify_zf(&reference, h)?, verify_zf(&ordered, h)?);

    let a = snr_profile(&reference, gamma_base).gamma;
    let b = snr_profile(&ordered, gamma_base).gamma;
    println!("{:>4} {:>10} {:>10}", "line", "THP dB", "VB dB");
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        println!("{i:>4} {:>10.2} {:>10.2}", db(*x), db(*y));
    }
    let worst = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    println!("worst line: {:.2} dB -> {:.2} dB", db(worst(&a)), db(worst(&b)));
    Ok(())
}
