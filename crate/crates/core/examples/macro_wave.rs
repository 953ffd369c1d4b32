//! Inviscid macroscopic NCC below the pressure onset: the density bump is
//! carried at v* while speeds relax exponentially.
//!
//! cargo run --release --example macro_wave

use trafficfluid::macrolab::setups::WaveSetup;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = WaveSetup::default();
    let h = w.run()?;
    let r = w.report(&h)?;
    println!("{:>6} {:>12} {:>14} {:>14}", "t [h]", "sup rho", "sup|v-v*|", "bound");
    for k in 0..r.times.len() {
        println!("{:>6.2} {:>12.4} {:>14.4e} {:>14.4e}", r.times[k], r.sup_rho[k], r.speed_err[k], r.speed_bound[k]);
    }
    println!("shifted-profile residuals between checkpoints: {:?}", r.shift_residual);
    Ok(())
}
