//! Mean flow (1/T)∫₀ᵀ (1/(m_F − m_S))∫_{m_S}^{m_F} ρv dx dt over the occupied window.

use super::field::{FieldHistory, MacroField};
use super::particles::ParticleEnsemble;
use crate::error::{Error, Result};

/// Window-averaged flow ρv of one snapshot, trapezoid over the cells with ρ > floor.
pub fn window_flow(f: &MacroField, floor: f64) -> Option<f64> {
    let first = f.rho.iter().position(|&r| r > floor)?;
    let last = f.rho.iter().rposition(|&r| r > floor)?;
    let q: Vec<f64> = (first..=last).map(|i| f.rho[i] * f.v[i]).collect();
    if q.len() == 1 {
        return Some(q[0]);
    }
    let integral = f.dx * (q.iter().sum::<f64>() - 0.5 * (q[0] + q[q.len() - 1]));
    Some(integral / (f.dx * (q.len() - 1) as f64))
}

fn time_average(samples: &[(f64, f64)], t_end: f64) -> Result<f64> {
    let pts: Vec<&(f64, f64)> = samples.iter().filter(|(t, _)| *t <= t_end * (1.0 + 1e-12)).collect();
    if pts.len() < 2 {
        return Err(Error::InvalidConfig("mean flow needs at least two samples in [0, T]".into()));
    }
    let mut acc = 0.0;
    for w in pts.windows(2) {
        acc += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
    }
    Ok(acc / (pts[pts.len() - 1].0 - pts[0].0))
}

/// Mean flow of a grid history [veh/h]. Errors when the support is empty at a sample.
pub fn mean_flow(h: &FieldHistory, t_end: f64, floor: f64) -> Result<f64> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidConfig(format!("mean flow horizon must be positive, got {t_end}")));
    }
    let mut pts = Vec::with_capacity(h.samples.len());
    for (t, f) in &h.samples {
        let q = window_flow(f, floor).ok_or_else(|| Error::InvalidConfig(format!("empty support at t = {t}")))?;
        pts.push((*t, q));
    }
    time_average(&pts, t_end)
}

/// Particle version: each particle carries m/n, the window is [x_n, x_1].
pub fn mean_flow_particles(samples: &[(f64, ParticleEnsemble)], t_end: f64) -> Result<f64> {
    let mut pts = Vec::with_capacity(samples.len());
    for (t, e) in samples {
        let n = e.n();
        let width = e.x[0] - e.x[n - 1];
        if !(width > 0.0) {
            return Err(Error::InvalidConfig(format!("empty support at t = {t}")));
        }
        pts.push((*t, e.m / n as f64 * e.v.iter().sum::<f64>() / width));
    }
    time_average(&pts, t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn history(vscale: f64) -> FieldHistory {
        let f = MacroField::sample(0.0, 10.0, 100, |x| if (2.0..5.0).contains(&x) { 30.0 } else { 0.0 }, |_| 50.0 * vscale).unwrap();
        FieldHistory { samples: (0..5).map(|k| (k as f64 * 0.25, f.clone())).collect(), steps: 0 }
    }

    #[test]
    fn constant_window_gives_rho_times_v() {
        assert_relative_eq!(mean_flow(&history(1.0), 1.0, 1e-6).unwrap(), 1500.0, max_relative = 1e-14);
    }

    #[test]
    fn linear_in_speed() {
        let a = mean_flow(&history(1.0), 1.0, 1e-6).unwrap();
        let b = mean_flow(&history(2.0), 1.0, 1e-6).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-14);
    }

    #[test]
    fn empty_support_is_an_error() {
        let f = MacroField::sample(0.0, 1.0, 10, |_| 0.0, |_| 1.0).unwrap();
        let h = FieldHistory { samples: vec![(0.0, f.clone()), (1.0, f)], steps: 0 };
        assert!(mean_flow(&h, 1.0, 1e-6).is_err());
    }
}
