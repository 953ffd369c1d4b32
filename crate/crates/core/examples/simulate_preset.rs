//! Runs one micro-simulation preset and prints a short summary.
//!
//! cargo run --release --example simulate_preset -- ncc-viscous 1

use trafficfluid::fleet::min_pair_distance;
use trafficfluid::microsim::{integrate, preset_scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("ncc-viscous");
    let seed: u64 = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let sc = preset_scenario(name, seed)?;
    let start = std::time::Instant::now();
    let tr = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg)?;
    let stride = (tr.samples.len() / 12).max(1);
    println!("{:>8} {:>12} {:>12} {:>12} {:>12}", "t [s]", "min d [m]", "max|v-v*|", "max|theta|", "min v");
    for (k, s) in tr.samples.iter().enumerate() {
        if k % stride != 0 && k + 1 != tr.samples.len() {
            continue;
        }
        let err = s.state.vehicles.iter().enumerate().map(|(i, v)| (v.v - sc.ctrl.v_star_of(i)).abs()).fold(0.0, f64::max);
        let th = s.state.vehicles.iter().map(|v| v.theta.abs()).fold(0.0, f64::max);
        let vmin = s.state.vehicles.iter().map(|v| v.v).fold(f64::INFINITY, f64::min);
        println!("{:>8.2} {:>12.4} {:>12.4e} {:>12.4e} {:>12.4}", s.t, min_pair_distance(&s.state, &sc.fleet), err, th, vmin);
    }
    println!(
        "{name} seed {seed}: {} accepted / {} rejected steps in {:.2?}",
        tr.accepted_steps,
        tr.rejected_steps,
        start.elapsed()
    );
    Ok(())
}
