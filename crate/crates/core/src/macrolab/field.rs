//! Cell-averaged density/speed fields and a fixed-checkpoint time-stepping driver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell i covers [x0 + i·dx, x0 + (i+1)·dx].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroField {
    pub x0: f64,
    pub dx: f64,
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportWindow {
    pub xs: f64,
    pub xf: f64,
}

impl SupportWindow {
    pub fn width(&self) -> f64 {
        self.xf - self.xs
    }
}

impl MacroField {
    /// Samples ρ₀ and v₀ at the cell centres of `cells` cells on [a, b].
    pub fn sample(a: f64, b: f64, cells: usize, rho0: impl Fn(f64) -> f64, v0: impl Fn(f64) -> f64) -> Result<Self> {
        if !(b > a) || cells < 3 {
            return Err(Error::InvalidConfig(format!("grid [{a}, {b}] with {cells} cells")));
        }
        let dx = (b - a) / cells as f64;
        let xs: Vec<f64> = (0..cells).map(|i| a + (i as f64 + 0.5) * dx).collect();
        Ok(Self { x0: a, dx, rho: xs.iter().map(|&x| rho0(x)).collect(), v: xs.iter().map(|&x| v0(x)).collect() })
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.dx
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.dx
    }

    pub fn max_rho(&self) -> f64 {
        self.rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cell-centre span of the cells with ρ > floor.
    pub fn support(&self, floor: f64) -> Option<SupportWindow> {
        let first = self.rho.iter().position(|&r| r > floor)?;
        let last = self.rho.iter().rposition(|&r| r > floor)?;
        Some(SupportWindow { xs: self.x(first), xf: self.x(last) })
    }

    /// Linear interpolation of ρ at x (zero outside the grid).
    pub fn rho_at(&self, x: f64) -> f64 {
        let s = (x - self.x0) / self.dx - 0.5;
        if s < -0.5 || s > self.len() as f64 - 0.5 {
            return 0.0;
        }
        let i = s.floor().clamp(0.0, (self.len() - 1) as f64) as usize;
        let j = (i + 1).min(self.len() - 1);
        let w = (s - i as f64).clamp(0.0, 1.0);
        self.rho[i] * (1.0 - w) + self.rho[j] * w
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FieldHistory {
    pub samples: Vec<(f64, MacroField)>,
    pub steps: usize,
}

impl FieldHistory {
    pub fn at(&self, t: f64) -> Option<&MacroField> {
        self.samples.iter().find(|(ts, _)| (ts - t).abs() <= 1e-9 * (1.0 + t.abs())).map(|(_, f)| f)
    }

    pub fn last(&self) -> Option<&MacroField> {
        self.samples.last().map(|(_, f)| f)
    }
}

/// Advances `field0` to `t_end`, storing snapshots every `sample_dt` (steps are
/// shortened to land on sample times). `max_dt` returns the stable step for the
/// current field; `step` performs one step.
pub fn run_field(
    field0: MacroField,
    t_end: f64,
    sample_dt: f64,
    cfl: f64,
    mut max_dt: impl FnMut(&MacroField) -> Result<f64>,
    mut step: impl FnMut(&MacroField, f64) -> Result<MacroField>,
) -> Result<FieldHistory> {
    if !(t_end > 0.0 && sample_dt > 0.0 && cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidConfig("run_field needs t_end, sample_dt > 0 and cfl in (0, 1]".into()));
    }
    let mut hist = FieldHistory::default();
    let mut t = 0.0;
    let mut field = field0;
    hist.samples.push((0.0, field.clone()));
    let n_samples = (t_end / sample_dt).round() as usize;
    for k in 1..=n_samples {
        let target = (k as f64 * sample_dt).min(t_end);
        while t < target - 1e-12 * target.max(1.0) {
            let dt_stable = max_dt(&field)?;
            if !(dt_stable > 0.0) || !dt_stable.is_finite() {
                return Err(Error::SolverAbort { t, reason: format!("stable step {dt_stable}") });
            }
            let remaining = target - t;
            let mut dt = cfl * dt_stable;
            if dt >= remaining {
                dt = remaining;
            } else if dt > 0.5 * remaining {
                dt = 0.5 * remaining;
            }
            field = step(&field, dt)?;
            t += dt;
            hist.steps += 1;
        }
        t = target;
        hist.samples.push((target, field.clone()));
    }
    Ok(hist)
}
