//! GCC on a road with an off-ramp: exiting vehicles follow their corridor,
//! the rest stay on the mainline, and nobody gets closer than L.
//!
//! cargo run --release --example offramp

use trafficfluid::fleet::min_pair_distance;
use trafficfluid::microsim::{integrate, offramp_exits, preset_scenario, OFFRAMP_HALF_WIDTH};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = preset_scenario("gcc-offramp", 1)?;
    let tr = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg)?;
    let min_d = tr.samples.iter().map(|s| min_pair_distance(&s.state, &sc.fleet)).fold(f64::INFINITY, f64::min);
    let last = &tr.samples.last().ok_or("empty run")?.state;
    let (mut off, mut on) = (0, 0);
    for (i, v) in last.vehicles.iter().enumerate() {
        // Past the ramp, exiting vehicles sit below the mainline's lower edge.
        if offramp_exits(i) && v.y < -OFFRAMP_HALF_WIDTH {
            off += 1;
        } else if !offramp_exits(i) && v.y.abs() < OFFRAMP_HALF_WIDTH {
            on += 1;
        }
    }
    let exiting = (0..sc.fleet.n).filter(|&i| offramp_exits(i)).count();
    println!("min distance {min_d:.3} m (L = {})", sc.fleet.l.get(0, 1));
    println!("on the ramp at t = {}: {off}/{exiting}; on the mainline: {on}/{}", last.t, sc.fleet.n - exiting);
    Ok(())
}
