//! A dense platoon under the particle macro-PRCC and under ARZ: how far it
//! spreads and how much it slows.
//!
//! cargo run --release --example platoon

use trafficfluid::macrolab::setups::PlatoonSetup;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = PlatoonSetup::default().report()?;
    println!("{:<10} {:>14} {:>16} {:>12}", "model", "width [km]", "min v [km/h]", "mass drift");
    println!("{:<10} {:>14.3} {:>16.2} {:>12.2e}", "macro-PRCC", r.prcc_support_width, r.prcc_min_speed, r.prcc_mass_drift);
    println!("{:<10} {:>14.3} {:>16.2} {:>12.2e}", "ARZ", r.arz_support_width, r.arz_min_speed, r.arz_mass_drift);
    Ok(())
}
