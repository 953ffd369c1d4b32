//! Two vehicles approaching a narrowing: the symmetric pair stalls, a small
//! lateral offset lets them pass one after the other.
//!
//! cargo run --release --example bottleneck

use trafficfluid::microsim::{integrate, preset_scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["gcc-bottleneck-symmetric", "gcc-bottleneck-perturbed"] {
        let sc = preset_scenario(name, 1)?;
        let tr = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg)?;
        let last = &tr.samples.last().ok_or("empty run")?.state;
        println!("{name}:");
        for (i, v) in last.vehicles.iter().enumerate() {
            println!("  vehicle {i}: x = {:8.2} m, y = {:6.3} m, v = {:6.3} m/s", v.x, v.y, v.v);
        }
    }
    Ok(())
}
