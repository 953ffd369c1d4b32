//! Lane-based NCC: numerical integration against the closed-form solution for
//! vehicles that start beyond the interaction range.
//!
//! cargo run --release --example lane_oracle

use trafficfluid::controllers::{LaneConfig, LaneState};
use trafficfluid::energy::eval_htilde;
use trafficfluid::microsim::{integrate_lane, prop1_oracle, IntegratorConfig};
use trafficfluid::shapes::{SaturationEll, VehiclePotential};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = LaneConfig {
        v_star: 30.0,
        v_max: 35.0,
        gamma: 0.1,
        potential: VehiclePotential::rational_cubic(1e-4, 5.59, 25.0),
        ell: SaturationEll::hinge(0.2),
    };
    // Leader first. Followers start slower than the vehicle ahead, so no gap
    // shrinks below the interaction range and the closed form applies.
    let init = LaneState { s: vec![40.0, 60.0, 35.0], v: vec![30.0, 29.0, 27.5, 26.0] };
    let icfg = IntegratorConfig { tol_abs: 1e-9, tol_rel: 1e-9, t_end: 20.0, sample_dt: 2.0, ..Default::default() };
    let sim = integrate_lane(&init, &cfg, &icfg)?;
    let times: Vec<f64> = sim.iter().map(|(t, _)| *t).collect();
    let exact = prop1_oracle(&init, &cfg, &times)?;
    println!("omega_bar = {}", cfg.omega_bar());
    println!("{:>6} {:>12} {:>12} {:>12}", "t [s]", "max dv [m/s]", "max ds [m]", "H~");
    for ((t, a), (_, b)) in sim.iter().zip(&exact) {
        let dv = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let ds = a.s.iter().zip(&b.s).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("{t:>6.1} {dv:>12.3e} {ds:>12.3e} {:>12.5}", eval_htilde(a, &cfg)?.value);
    }
    Ok(())
}
