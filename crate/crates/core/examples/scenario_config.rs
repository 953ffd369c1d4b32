//! Builds a scenario from JSON, runs it through the harness and lists the
//! files it wrote.
//!
//! cargo run --release --example scenario_config -- /tmp/trafficfluid-example

use trafficfluid::harness::{run, ScenarioConfig};

const CONFIG: &str = r#"{
    "schema": 1,
    "id": "prcc-kmh",
    "kind": "micro",
    "seed": 7,
    "micro": {
        "preset": "prcc-viscous",
        "units": {"speed": "km/h"},
        "params": {"v_star": [100.0], "t_end": 20.0}
    }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("trafficfluid-example").display().to_string());
    let cfg = ScenarioConfig::from_json(CONFIG)?;
    let report = run(&cfg, std::path::Path::new(&root))?;
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.actual);
    }
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(())
}
