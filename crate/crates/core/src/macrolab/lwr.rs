//! LWR baseline with the exponential speed–density relation
//! F(ρ) = v_f exp(−(1/â)(ρ/ρ_c)^â), solved by Godunov's method.

use serde::{Deserialize, Serialize};

use super::field::{run_field, FieldHistory, MacroField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LwrParams {
    pub v_f: f64,
    pub rho_c: f64,
    pub a_hat: f64,
}

impl LwrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_f > 0.0 && self.rho_c > 0.0 && self.a_hat > 0.0) {
            return Err(Error::InvalidConfig("LWR parameters must be positive".into()));
        }
        Ok(())
    }

    /// Equilibrium speed F(ρ).
    pub fn speed(&self, rho: f64) -> f64 {
        self.v_f * (-(rho.max(0.0) / self.rho_c).powf(self.a_hat) / self.a_hat).exp()
    }

    /// F′(ρ).
    pub fn dspeed(&self, rho: f64) -> f64 {
        let r = rho.max(0.0) / self.rho_c;
        -self.speed(rho) * r.powf(self.a_hat - 1.0) / self.rho_c
    }

    /// q(ρ) = ρF(ρ).
    pub fn flux(&self, rho: f64) -> f64 {
        rho * self.speed(rho)
    }

    /// q′(ρ) = F(ρ)(1 − (ρ/ρ_c)^â).
    pub fn dflux(&self, rho: f64) -> f64 {
        self.speed(rho) * (1.0 - (rho.max(0.0) / self.rho_c).powf(self.a_hat))
    }

    /// Godunov flux: min q on [ρ_L, ρ_R] when ρ_L ≤ ρ_R, max q on [ρ_R, ρ_L]
    /// otherwise. q is increasing below ρ_c and decreasing above, so the extrema
    /// sit at the endpoints or at ρ_c.
    pub fn godunov_flux(&self, rl: f64, rr: f64) -> f64 {
        self.godunov_from(rl, rr, self.flux(rl), self.flux(rr))
    }

    fn godunov_from(&self, rl: f64, rr: f64, ql: f64, qr: f64) -> f64 {
        if rl <= rr {
            ql.min(qr)
        } else if rr <= self.rho_c && self.rho_c <= rl {
            self.flux(self.rho_c)
        } else {
            ql.max(qr)
        }
    }

    /// |q′| from the speed F alone: (ρ/ρ_c)^â = â ln(v_f/F).
    fn wave_speed_of(&self, speed: f64) -> f64 {
        speed * (1.0 - self.a_hat * (self.v_f / speed).ln()).abs()
    }

    /// Global bound on |q′|: q′ ≤ v_f below ρ_c and |q′| ≤ v_f·â·e^{−1−1/â} above.
    pub fn wave_speed_bound(&self) -> f64 {
        self.v_f * (self.a_hat * (-1.0 - 1.0 / self.a_hat).exp()).max(1.0)
    }

    /// max|q′(ρ)| over the field, at least v_f = q′(0).
    pub fn max_wave_speed(&self, f: &MacroField) -> f64 {
        f.rho.iter().filter(|r| **r > 0.0).map(|&r| self.wave_speed_of(self.speed(r))).fold(self.v_f, f64::max)
    }
}

/// One Godunov step with vacuum upstream and free outflow downstream. Errors on
/// CFL > 1. Faces between two empty cells carry no flux and are skipped.
pub fn lwr_godunov_step(f: &MacroField, lp: &LwrParams, dt: f64) -> Result<MacroField> {
    let n = f.len();
    let (Some(first), Some(last)) = (f.rho.iter().position(|r| *r != 0.0), f.rho.iter().rposition(|r| *r != 0.0)) else {
        return Ok(f.clone());
    };
    // Cells first..=hi can change; the face left of `first` sees vacuum upstream and carries nothing.
    let hi = (last + 1).min(n - 1);
    let mut a = lp.v_f;
    let q: Vec<f64> = (first..=hi)
        .map(|i| {
            let r = f.rho[i];
            if r == 0.0 {
                return 0.0;
            }
            let sp = lp.speed(r);
            a = a.max(lp.wave_speed_of(sp));
            r * sp
        })
        .collect();
    if a * dt > f.dx * (1.0 + 1e-12) {
        return Err(Error::SolverAbort { t: f64::NAN, reason: format!("CFL number {} exceeds 1", a * dt / f.dx) });
    }
    let state = |i: usize| -> (f64, f64) {
        let i = i.min(n - 1);
        if i < first || i > hi {
            (0.0, 0.0)
        } else {
            (f.rho[i], q[i - first])
        }
    };
    let faces: Vec<f64> = (first..=hi + 1)
        .map(|i| {
            if i == first {
                return 0.0;
            }
            let (rl, ql) = state(i - 1);
            let (rr, qr) = state(i);
            lp.godunov_from(rl, rr, ql, qr)
        })
        .collect();
    let c = dt / f.dx;
    let mut rho = f.rho.clone();
    let mut v = f.v.clone();
    for i in first..=hi {
        rho[i] -= c * (faces[i + 1 - first] - faces[i - first]);
        v[i] = lp.speed(rho[i]);
    }
    Ok(MacroField { x0: f.x0, dx: f.dx, rho, v })
}

pub fn lwr_run(f0: MacroField, lp: &LwrParams, t_end: f64, sample_dt: f64, cfl: f64) -> Result<FieldHistory> {
    lp.validate()?;
    let mut f0 = f0;
    f0.v = f0.rho.iter().map(|&r| lp.speed(r)).collect();
    run_field(
        f0,
        t_end,
        sample_dt,
        cfl,
        |f| Ok(f.dx / lp.wave_speed_bound()),
        |f, dt| lwr_godunov_step(f, lp, dt),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LP: LwrParams = LwrParams { v_f: 102.0, rho_c: 33.3, a_hat: 2.34 };

    #[test]
    fn speed_relation_values() {
        assert_eq!(LP.speed(0.0), 102.0);
        assert_relative_eq!(LP.speed(33.3), 102.0 * (-1.0f64 / 2.34).exp(), max_relative = 1e-14);
        assert_relative_eq!(LP.speed(33.3), 66.530, max_relative = 1e-4);
    }

    #[test]
    fn flux_peaks_at_critical_density() {
        let mut best = (0.0, 0.0);
        for k in 0..180_000 {
            let r = k as f64 * 1e-3;
            if LP.flux(r) > best.1 {
                best = (r, LP.flux(r));
            }
        }
        assert!((best.0 - 33.3).abs() < 2e-3);
        let h = 1e-6;
        for r in [1.0, 20.0, 33.3, 60.0] {
            assert_relative_eq!(LP.dflux(r), (LP.flux(r + h) - LP.flux(r - h)) / (2.0 * h), max_relative = 1e-6, epsilon = 1e-6);
            assert_relative_eq!(LP.dspeed(r), (LP.speed(r + h) - LP.speed(r - h)) / (2.0 * h), max_relative = 1e-6);
        }
    }

    #[test]
    fn godunov_flux_matches_brute_force_extrema() {
        let scan = |a: f64, b: f64, min: bool| {
            let (lo, hi) = (a.min(b), a.max(b));
            (0..=20_000)
                .map(|k| LP.flux(lo + (hi - lo) * k as f64 / 20_000.0))
                .fold(if min { f64::INFINITY } else { f64::NEG_INFINITY }, |acc, q| if min { acc.min(q) } else { acc.max(q) })
        };
        for (l, r) in [(5.0, 60.0), (60.0, 5.0), (10.0, 20.0), (50.0, 40.0), (0.0, 170.0), (170.0, 0.0)] {
            let expected = scan(l, r, l <= r);
            assert_relative_eq!(LP.godunov_flux(l, r), expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn constant_field_is_stationary() {
        let f = MacroField::sample(0.0, 10.0, 100, |_| 25.0, |_| 0.0).unwrap();
        let dt = 0.9 * f.dx / LP.max_wave_speed(&f);
        let g = lwr_godunov_step(&f, &LP, dt).unwrap();
        assert_eq!(g.rho[1..], f.rho[1..]);
        assert!(lwr_godunov_step(&f, &LP, 2.0 * f.dx / LP.max_wave_speed(&f)).is_err());
    }

    #[test]
    fn mass_is_conserved_with_compact_support() {
        let f = MacroField::sample(0.0, 20.0, 400, |x| if (2.0..6.0).contains(&x) { 40.0 } else { 0.0 }, |_| 0.0).unwrap();
        let h = lwr_run(f.clone(), &LP, 0.05, 0.01, 0.9).unwrap();
        let m = h.last().unwrap().mass();
        assert_relative_eq!(m, f.mass(), max_relative = 1e-12);
    }

    #[test]
    fn wave_speed_bound_dominates() {
        for a_hat in [1.5, 2.34, 5.0] {
            let lp = LwrParams { a_hat, ..LP };
            let scan = (0..200_000).map(|k| lp.dflux(k as f64 * 1e-3).abs()).fold(0.0, f64::max);
            assert!(scan <= lp.wave_speed_bound() * (1.0 + 1e-12));
            assert!(scan >= lp.wave_speed_bound() * (1.0 - 1e-6));
        }
    }

    #[test]
    fn windowed_step_matches_full_sweep() {
        let f = MacroField::sample(0.0, 20.0, 400, |x| if (2.0..6.0).contains(&x) { 20.0 + 30.0 * (x - 2.0) / 4.0 } else { 0.0 }, |_| 0.0).unwrap();
        let dt = 0.9 * f.dx / LP.max_wave_speed(&f);
        let g = lwr_godunov_step(&f, &LP, dt).unwrap();
        let n = f.len();
        let ghost = |i: isize| if i < 0 { 0.0 } else { f.rho[(i as usize).min(n - 1)] };
        for i in 0..n {
            let fl = LP.godunov_flux(ghost(i as isize - 1), ghost(i as isize));
            let fr = LP.godunov_flux(ghost(i as isize), ghost(i as isize + 1));
            let expected = f.rho[i] - dt / f.dx * (fr - fl);
            assert_relative_eq!(g.rho[i], expected, max_relative = 1e-14, epsilon = 1e-14);
        }
    }
}
