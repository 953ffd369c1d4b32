//! Writes gnuplot-ready series for a micro preset and for the belt comparison.
//!
//! cargo run --release --example plot_series -- /tmp/trafficfluid-plots

use std::path::PathBuf;

use trafficfluid::harness::{emit_plot_data, PlotSource, Series};
use trafficfluid::macrolab::setups::BeltSetup;
use trafficfluid::microsim::{integrate, preset_scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("trafficfluid-plots"));
    let mut sc = preset_scenario("ncc-inviscid", 1)?;
    sc.icfg.t_end = 20.0;
    let tr = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg)?;
    let micro = PlotSource::Micro { scenario: &sc, trajectory: &tr };
    let mut files = Vec::new();
    for s in [Series::SpeedError, Series::MinDistance, Series::Frames] {
        files.extend(emit_plot_data(&micro, s, &dir)?);
    }
    let belt = BeltSetup::default();
    let h = belt.run_heat(102.0)?;
    let cps = [0.0, 0.5 * belt.t_end, belt.t_end];
    let field = PlotSource::Field { label: "heat-eq-v102", history: &h, checkpoints: &cps };
    files.extend(emit_plot_data(&field, Series::DensityCheckpoints, &dir)?);
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}
