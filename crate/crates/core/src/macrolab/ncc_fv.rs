//! Finite-volume solver for the macro-NCC
//! ρ_t + (ρv)_x = 0, v_t + v v_x = G − J(G)(v − v*), G = −P′(ρ)ρ_x/ρ + (μ(ρ)g(v)_x)_x/ρ.
//!
//! The grid moves with v*, so the unknowns are ρ and u = v − v*. Pressure enters
//! the u-flux through the enthalpy h(ρ) = ∫_ρ̄^ρ P′(r)/r dr, convection uses a local
//! Lax–Friedrichs flux, and the remaining linear-in-u source is integrated exactly
//! with J and the viscous force frozen over the step. Far-field states are
//! prescribed in ghost cells.

use serde::{Deserialize, Serialize};

use super::field::{run_field, FieldHistory, MacroField};
use super::params::{adaptive_simpson, MacroParams, PressureLaw, ViscosityLaw};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub rho: f64,
    pub v: f64,
}

/// h(ρ) = ∫_ρ̄^ρ P′(r)/r dr (zero at or below ρ̄).
pub fn enthalpy(p: &MacroParams, rho: f64) -> Result<f64> {
    if matches!(p.pressure, PressureLaw::Zero) || rho <= p.rho_bar {
        return Ok(0.0);
    }
    let f = |r: f64| p.dpressure(r).unwrap_or(f64::NAN) / r;
    adaptive_simpson(&f, p.rho_bar, rho, 1e-12 * (1.0 + p.pressure(rho)?.abs()))
}

struct Extended {
    rho: Vec<f64>,
    u: Vec<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
}

fn extend(f: &MacroField, p: &MacroParams, far: &FarField) -> Result<Extended> {
    let mut rho = Vec::with_capacity(f.len() + 2);
    let mut u = Vec::with_capacity(f.len() + 2);
    rho.push(far.rho);
    u.push(far.v - p.v_star);
    for (r, v) in f.rho.iter().zip(&f.v) {
        rho.push(*r);
        u.push(v - p.v_star);
    }
    rho.push(far.rho);
    u.push(far.v - p.v_star);
    let h = rho.iter().map(|&r| enthalpy(p, r)).collect::<Result<Vec<_>>>()?;
    let c = rho.iter().map(|&r| p.dpressure(r).map(|d| d.max(0.0).sqrt())).collect::<Result<Vec<_>>>()?;
    Ok(Extended { rho, u, h, c })
}

/// (Σ over cells of the viscous force, per cell) from centred differences.
fn viscous_force(e: &Extended, p: &MacroParams, dx: f64) -> Result<Vec<f64>> {
    let n = e.rho.len() - 2;
    if matches!(p.viscosity, ViscosityLaw::Zero) {
        return Ok(vec![0.0; n]);
    }
    let g: Vec<f64> = e.u.iter().map(|u| p.g.g(u + p.v_star)).collect();
    let mut faces = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mu = p.viscosity(0.5 * (e.rho[k] + e.rho[k + 1]))?;
        faces.push(mu * (g[k + 1] - g[k]) / dx);
    }
    Ok((0..n).map(|i| if e.rho[i + 1] > 0.0 { (faces[i + 1] - faces[i]) / (dx * e.rho[i + 1]) } else { 0.0 }).collect())
}

/// Largest stable step: dx/max(|u| + sqrt(P′)) and, when viscous,
/// dx²·min ρ/(2·max μ·g′).
pub fn ncc_fv_stable_dt(f: &MacroField, p: &MacroParams, far: &FarField) -> Result<f64> {
    let e = extend(f, p, far)?;
    let a = e.u.iter().zip(&e.c).map(|(u, c)| u.abs() + c).fold(0.0, f64::max);
    let mut dt = if a > 0.0 { f.dx / a } else { f64::MAX };
    if !matches!(p.viscosity, ViscosityLaw::Zero) {
        let mut d = 0.0f64;
        for (r, u) in e.rho.iter().zip(&e.u) {
            if *r > 0.0 {
                d = d.max(p.viscosity(*r)? * p.g.eval_pair(u + p.v_star).1 / r);
            }
        }
        if d > 0.0 {
            dt = dt.min(f.dx * f.dx / (2.0 * d));
        }
    }
    Ok(dt)
}

/// One step of length dt. The grid origin advances by v*·dt.
pub fn macro_ncc_fv_step(f: &MacroField, p: &MacroParams, far: &FarField, dt: f64) -> Result<MacroField> {
    let limit = ncc_fv_stable_dt(f, p, far)?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::SolverAbort { t: f64::NAN, reason: format!("step {dt:e} exceeds the stability bound {limit:e}") });
    }
    let e = extend(f, p, far)?;
    let n = f.len();
    let mut fr = Vec::with_capacity(n + 1);
    let mut fu = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (l, r) = (k, k + 1);
        let a = (e.u[l].abs() + e.c[l]).max(e.u[r].abs() + e.c[r]);
        fr.push(0.5 * (e.rho[l] * e.u[l] + e.rho[r] * e.u[r]) - 0.5 * a * (e.rho[r] - e.rho[l]));
        let pl = 0.5 * e.u[l] * e.u[l] + e.h[l];
        let pr = 0.5 * e.u[r] * e.u[r] + e.h[r];
        fu.push(0.5 * (pl + pr) - 0.5 * a * (e.u[r] - e.u[l]));
    }
    let visc = viscous_force(&e, p, f.dx)?;
    let c = dt / f.dx;
    let mut rho = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let k = i + 1;
        let r = e.rho[k] - c * (fr[i + 1] - fr[i]);
        let u_adv = e.u[k] - c * (fu[i + 1] - fu[i]);
        let grad_h = (e.h[k + 1] - e.h[k - 1]) / (2.0 * f.dx);
        let big_g = -grad_h + visc[i];
        let j = p.j_gain(big_g);
        let u = if j.abs() * dt < 1e-300 {
            u_adv + visc[i] * dt
        } else {
            let decay = (-j * dt).exp();
            u_adv * decay - visc[i] * (-j * dt).exp_m1() / j
        };
        if !(r >= 0.0 && r < p.rho_max) {
            return Err(Error::SolverAbort { t: f64::NAN, reason: format!("density {r} left [0, rho_max) in cell {i}") });
        }
        let vi = u + p.v_star;
        if !(vi > 0.0 && vi < p.v_max) {
            return Err(Error::SolverAbort { t: f64::NAN, reason: format!("speed {vi} left (0, v_max) in cell {i}") });
        }
        rho.push(r);
        v.push(vi);
    }
    Ok(MacroField { x0: f.x0 + p.v_star * dt, dx: f.dx, rho, v })
}

pub fn ncc_fv_run(f0: MacroField, p: &MacroParams, far: &FarField, t_end: f64, sample_dt: f64, cfl: f64) -> Result<FieldHistory> {
    p.validate()?;
    run_field(f0, t_end, sample_dt, cfl, |f| ncc_fv_stable_dt(f, p, far), |f, dt| macro_ncc_fv_step(f, p, far, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> MacroParams {
        let mut p = MacroParams::new(1.0, 180.0, 90.0, 100.0, 60.0);
        p.pressure = PressureLaw::GapQuadratic;
        p.with_omega_tilde(5.0).unwrap()
    }

    #[test]
    fn constant_state_is_unchanged() {
        let p = params();
        let far = FarField { rho: 45.0, v: 60.0 };
        let f = MacroField::sample(-1.0, 2.0, 60, |_| 45.0, |_| 60.0).unwrap();
        let g = macro_ncc_fv_step(&f, &p, &far, 1e-3).unwrap();
        assert_eq!(g.rho, f.rho);
        assert_eq!(g.v, f.v);
        assert_relative_eq!(g.x0, -1.0 + 0.06, max_relative = 1e-12);
    }

    #[test]
    fn light_traffic_relaxes_at_omega() {
        let p = params();
        let far = FarField { rho: 30.0, v: 62.0 };
        let f = MacroField::sample(-1.0, 2.0, 60, |_| 30.0, |_| 62.0).unwrap();
        let dt = 0.5 * ncc_fv_stable_dt(&f, &p, &far).unwrap();
        let g = macro_ncc_fv_step(&f, &p, &far, dt).unwrap();
        for v in &g.v {
            assert_relative_eq!(v - 60.0, 2.0 * (-p.omega_tilde() * dt).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn enthalpy_matches_quadrature_of_pressure() {
        let p = params();
        assert_eq!(enthalpy(&p, 80.0).unwrap(), 0.0);
        // h′(ρ) = P′(ρ)/ρ
        let (r, d) = (120.0, 1e-4);
        let fd = (enthalpy(&p, r + d).unwrap() - enthalpy(&p, r - d).unwrap()) / (2.0 * d);
        assert_relative_eq!(fd, p.dpressure(r).unwrap() / r, max_relative = 1e-7);
    }

    #[test]
    fn mass_conserved_away_from_boundaries() {
        let p = params();
        let far = FarField { rho: 0.0, v: 60.0 };
        let f = MacroField::sample(-2.0, 3.0, 250, |x| if (0.0..1.0).contains(&x) { 150.0 } else { 0.0 }, |_| 60.0).unwrap();
        let m0 = f.mass();
        let h = ncc_fv_run(f, &p, &far, 0.01, 0.005, 0.8).unwrap();
        assert!(((h.last().unwrap().mass() - m0) / m0).abs() < 1e-12);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let p = params();
        let far = FarField { rho: 30.0, v: 62.0 };
        let f = MacroField::sample(-1.0, 2.0, 60, |_| 30.0, |_| 62.0).unwrap();
        let dt = ncc_fv_stable_dt(&f, &p, &far).unwrap();
        assert!(macro_ncc_fv_step(&f, &p, &far, 1.5 * dt).is_err());
    }
}
