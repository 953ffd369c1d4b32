//! Balanced particle macro-PRCC: the speed functionals decay at k̃ and 2k̃.
//!
//! cargo run --release --example functional_decay

use trafficfluid::macrolab::setups::DecaySetup;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = DecaySetup::default().run()?;
    println!("{:>8} {:>10} {:>14} {:>14} {:>14}", "t [h]", "I1", "I2", "I3", "I4");
    for k in 0..r.times.len() {
        println!("{:>8.4} {:>10.4} {:>14.6e} {:>14.6e} {:>14.6e}", r.times[k], r.i1[k], r.i2[k], r.i3[k], r.i4[k]);
    }
    println!("k~ = {}: fitted rates I2 {:.4}, I4 {:.4}, sup phi {:.4}", r.k_tilde, r.rate_i2, r.rate_i4, r.rate_phibar);
    Ok(())
}
