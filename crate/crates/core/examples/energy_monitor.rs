//! Tracks the energy a controller dissipates along a run, split into parts.
//!
//! cargo run --release --example energy_monitor -- prcc-viscous

use trafficfluid::controllers::Family;
use trafficfluid::energy::{eval_h, eval_hbar, eval_hr};
use trafficfluid::microsim::{integrate, preset_scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "ncc-viscous".into());
    let mut sc = preset_scenario(&name, 1)?;
    sc.icfg.t_end = sc.icfg.t_end.min(30.0);
    let tr = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg)?;
    let stride = (tr.samples.len() / 10).max(1);
    for s in tr.samples.iter().step_by(stride) {
        let e = match sc.ctrl.family {
            Family::Ncc => eval_h(&s.state, &sc.fleet, &sc.ctrl)?,
            Family::Prcc => eval_hr(&s.state, &sc.fleet, &sc.ctrl)?,
            _ => eval_hbar(&s.state, &sc.fleet, &sc.ctrl, &sc.road)?,
        };
        let parts: Vec<String> = e.parts.iter().map(|(k, v)| format!("{k} {v:.4e}")).collect();
        println!("t = {:6.2} s  total {:.6e}  [{}]", s.t, e.value, parts.join(", "));
    }
    Ok(())
}
