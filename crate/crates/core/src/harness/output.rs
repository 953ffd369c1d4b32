//! CSV/JSON writers and gnuplot-ready plot series.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fleet::min_pair_distance;
use crate::macrolab::FieldHistory;
use crate::microsim::{Scenario, Trajectory};

/// Shortest round-trip decimal form, '.' separator.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Writes a CSV with a mandatory header row and '\n' line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch { expected: header.len(), got: row.len() });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(path.to_path_buf())
}

/// Time label used in snapshot file names.
pub fn time_tag(t: f64) -> String {
    format!("t{}", num(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Series {
    /// t vs sup_i |v_i − v*_i|.
    SpeedError,
    /// t vs min_{i<j} d_{i,j}.
    MinDistance,
    /// (t, vehicle_id, x, y, θ) blocks, one per sample.
    Frames,
    /// x vs ρ, one file per checkpoint.
    DensityCheckpoints,
}

impl Series {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SpeedError => "speed-error",
            Self::MinDistance => "min-distance",
            Self::Frames => "frames",
            Self::DensityCheckpoints => "density-checkpoints",
        }
    }
}

pub enum PlotSource<'a> {
    Micro { scenario: &'a Scenario, trajectory: &'a Trajectory },
    Field { label: &'a str, history: &'a FieldHistory, checkpoints: &'a [f64] },
}

fn write_dat(path: &Path, header: &str, body: &str) -> Result<PathBuf> {
    std::fs::write(path, format!("# {header}\n{body}"))?;
    Ok(path.to_path_buf())
}

/// Writes whitespace-separated two-column (or frame) series with a commented
/// header naming the units.
pub fn emit_plot_data(src: &PlotSource, series: Series, dir: &Path) -> Result<Vec<PathBuf>> {
    let missing = |what: &str| Error::InvalidConfig(format!("series '{}': {what}", series.name()));
    std::fs::create_dir_all(dir)?;
    match (src, series) {
        (PlotSource::Micro { scenario, trajectory }, Series::SpeedError | Series::MinDistance | Series::Frames) => {
            if trajectory.samples.is_empty() {
                return Err(missing("empty trajectory"));
            }
            let mut body = String::new();
            let (file, header) = match series {
                Series::SpeedError => {
                    for s in &trajectory.samples {
                        let e = s
                            .state
                            .vehicles
                            .iter()
                            .enumerate()
                            .map(|(i, v)| (v.v - scenario.ctrl.v_star_of(i)).abs())
                            .fold(0.0, f64::max);
                        body.push_str(&format!("{} {}\n", num(s.t), num(e)));
                    }
                    ("speed_error.dat", "t_s sup_speed_err_mps")
                }
                Series::MinDistance => {
                    if scenario.fleet.n < 2 {
                        return Err(missing("needs at least two vehicles"));
                    }
                    for s in &trajectory.samples {
                        body.push_str(&format!("{} {}\n", num(s.t), num(min_pair_distance(&s.state, &scenario.fleet))));
                    }
                    ("min_distance.dat", "t_s min_distance_m")
                }
                _ => {
                    for s in &trajectory.samples {
                        for (i, v) in s.state.vehicles.iter().enumerate() {
                            body.push_str(&format!("{} {i} {} {} {}\n", num(s.t), num(v.x), num(v.y), num(v.theta)));
                        }
                        body.push('\n');
                    }
                    ("frames.dat", "t_s vehicle_id x_m y_m theta_rad")
                }
            };
            Ok(vec![write_dat(&dir.join(file), header, &body)?])
        }
        (PlotSource::Field { label, history, checkpoints }, Series::DensityCheckpoints) => {
            if history.samples.is_empty() {
                return Err(missing("empty history"));
            }
            let mut files = Vec::new();
            for &t in checkpoints.iter() {
                let f = history.at(t).ok_or_else(|| missing(&format!("no snapshot at t = {t} h")))?;
                let body: String = (0..f.len()).map(|i| format!("{} {}\n", num(f.x(i)), num(f.rho[i]))).collect();
                files.push(write_dat(&dir.join(format!("{label}_rho_{}.dat", time_tag(t))), "x_km rho_veh_per_km", &body)?);
            }
            Ok(files)
        }
        _ => Err(missing("not available from this source")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::macrolab::MacroField;
    use crate::microsim::{integrate, preset_scenario};

    #[test]
    fn csv_has_header_and_unix_newlines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(&dir.path().join("a.csv"), &["t_s", "x_m"], vec![vec![num(0.5), num(1.25)]]).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "t_s,x_m\n0.5,1.25\n");
        assert!(write_csv(&dir.path().join("b.csv"), &["t_s"], vec![vec![num(1.0), num(2.0)]]).is_err());
    }

    #[test]
    fn micro_series_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut sc = preset_scenario("ncc-viscous", 1).unwrap();
        sc.icfg.t_end = 2.0;
        let tr = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg).unwrap();
        let src = PlotSource::Micro { scenario: &sc, trajectory: &tr };
        let files = emit_plot_data(&src, Series::MinDistance, dir.path()).unwrap();
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert!(text.starts_with("# t_s min_distance_m\n"));
        assert_eq!(text.lines().count(), 1 + tr.samples.len());
        assert!(text.lines().skip(1).all(|l| l.split(' ').nth(1).unwrap().parse::<f64>().unwrap() > 5.59));
        let frames = emit_plot_data(&src, Series::Frames, dir.path()).unwrap();
        assert!(std::fs::read_to_string(&frames[0]).unwrap().contains("\n\n"));
    }

    #[test]
    fn empty_inputs_name_the_series() {
        let dir = tempfile::tempdir().unwrap();
        let sc = preset_scenario("ncc-viscous", 1).unwrap();
        let tr = Trajectory { samples: vec![], events: vec![], accepted_steps: 0, rejected_steps: 0 };
        let err = emit_plot_data(&PlotSource::Micro { scenario: &sc, trajectory: &tr }, Series::SpeedError, dir.path()).unwrap_err();
        assert!(err.to_string().contains("speed-error"));
        let h = FieldHistory { samples: vec![(0.0, MacroField::sample(0.0, 1.0, 4, |_| 1.0, |_| 1.0).unwrap())], steps: 0 };
        let src = PlotSource::Field { label: "x", history: &h, checkpoints: &[0.5] };
        let err = emit_plot_data(&src, Series::DensityCheckpoints, dir.path()).unwrap_err();
        assert!(err.to_string().contains("density-checkpoints"));
        assert!(emit_plot_data(&src, Series::Frames, dir.path()).is_err());
    }
}
