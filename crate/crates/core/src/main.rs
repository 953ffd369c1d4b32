use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trafficfluid::harness::{
    self, emit_plot_data, format_table, load_config_with_seed, output_root, Kind, PlotSource, ScenarioConfig, Series,
};
use trafficfluid::microsim::integrate;
use trafficfluid::Error;

#[derive(Parser)]
#[command(name = "trafficfluid", version, about = "Lane-free traffic controllers and macroscopic models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Micro preset name (used when no config is given).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root (else $TRAFFICFLUID_OUT, else the config's out_dir, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its CSV/JSON artifacts.
    Simulate(Common),
    /// Run a compare scenario (default: reduced model at 102 and 51 km/h against LWR).
    Compare(Common),
    /// Run acceptance suites and print target/actual/tolerance per check.
    Accept {
        /// Suite, single check (e.g. decay-I2) or "all".
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write gnuplot-ready series for a scenario.
    PlotData(Common),
}

fn config_from(c: &Common, fallback: impl FnOnce() -> trafficfluid::Result<ScenarioConfig>) -> trafficfluid::Result<ScenarioConfig> {
    match (&c.config, &c.preset) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig("give either --config or --preset, not both".into())),
        (Some(path), None) => load_config_with_seed(path, c.seed),
        (None, Some(p)) => ScenarioConfig::preset(p, c.seed.unwrap_or(1)),
        (None, None) => fallback(),
    }
}

fn print_report(r: &harness::RunReport) {
    for c in &r.checks {
        println!("{} {}: actual {} (target {}, tol {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.actual, c.target, c.tolerance);
    }
    for (k, v) in &r.metrics {
        println!("  {k} = {v}");
    }
    println!("{} files written", r.files.len());
}

fn plot_data(cfg: &ScenarioConfig, dir: &std::path::Path) -> trafficfluid::Result<Vec<PathBuf>> {
    let mut files = vec![];
    match cfg.kind {
        Kind::Micro => {
            let sc = cfg.scenario()?;
            let tr = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg)?;
            let src = PlotSource::Micro { scenario: &sc, trajectory: &tr };
            for s in [Series::SpeedError, Series::MinDistance, Series::Frames] {
                if s == Series::MinDistance && sc.fleet.n < 2 {
                    continue;
                }
                files.extend(emit_plot_data(&src, s, dir)?);
            }
        }
        Kind::Macro | Kind::Compare => {
            let m = cfg.macro_.as_ref().expect("validated");
            for spec in &m.models {
                let (hist, cps) = match *spec {
                    harness::MacroModelSpec::HeatEq { v_star } => (m.belt.run_heat(v_star)?, vec![0.0, 0.5 * m.belt.t_end, m.belt.t_end]),
                    harness::MacroModelSpec::Lwr => (m.belt.run_lwr()?, vec![0.0, 0.5 * m.belt.t_end, m.belt.t_end]),
                    harness::MacroModelSpec::NccWave => (m.wave.run()?, m.wave.checkpoints.clone()),
                    harness::MacroModelSpec::ArzPlatoon => (m.platoon.run_arz()?, vec![0.0, 0.5 * m.platoon.t_end, m.platoon.t_end]),
                    other => {
                        return Err(Error::InvalidConfig(format!("plot-data: density checkpoints need a grid model, got {}", other.label())))
                    }
                };
                let cps = if cfg.checkpoints.is_empty() { cps } else { cfg.checkpoints.clone() };
                let label = spec.label();
                let src = PlotSource::Field { label: &label, history: &hist, checkpoints: &cps };
                files.extend(emit_plot_data(&src, Series::DensityCheckpoints, dir)?);
            }
        }
    }
    Ok(files)
}

fn main_inner(cli: Cli) -> trafficfluid::Result<bool> {
    match cli.cmd {
        Cmd::Simulate(c) => {
            let cfg = config_from(&c, || Err(Error::InvalidConfig("simulate needs --config or --preset".into())))?;
            let rep = harness::run(&cfg, &output_root(c.out.as_deref(), Some(&cfg)))?;
            print_report(&rep);
            Ok(rep.passed())
        }
        Cmd::Compare(c) => {
            let cfg = config_from(&c, ScenarioConfig::belt_comparison)?;
            if cfg.kind != Kind::Compare {
                return Err(Error::InvalidConfig(format!("compare needs a config of kind \"compare\", got {:?}", cfg.kind)));
            }
            let rep = harness::run(&cfg, &output_root(c.out.as_deref(), Some(&cfg)))?;
            print_report(&rep);
            Ok(rep.passed())
        }
        Cmd::Accept { suite, out } => {
            let reports = harness::accept(&suite)?;
            print!("{}", format_table(&reports));
            let root = output_root(out.as_deref(), None);
            std::fs::create_dir_all(&root)?;
            let path = root.join(format!("accept-{suite}.json"));
            harness::output::write_json(&path, &reports)?;
            println!("report: {}", path.display());
            Ok(reports.iter().all(|r| r.passed()))
        }
        Cmd::PlotData(c) => {
            let cfg = config_from(&c, || Err(Error::InvalidConfig("plot-data needs --config or --preset".into())))?;
            let dir = output_root(c.out.as_deref(), Some(&cfg)).join(&cfg.id).join("plot");
            let files = plot_data(&cfg, &dir)?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
