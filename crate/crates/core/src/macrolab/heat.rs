//! The reduced model ρ_t + (ρ𝒢⁻¹(−P′(ρ)ρ_x/(k̃ρ)))_x = 0 on a grid that moves
//! with speed v*. In that frame the flux is ρ(𝒢⁻¹(·) − v*), which vanishes where
//! ρ ≤ ρ̄, so the transport part is exact and the remaining flux is a degenerate
//! nonlinear diffusion.

use super::field::{run_field, FieldHistory, MacroField};
use super::params::MacroParams;
use crate::error::{Error, Result};

/// Lab-frame flux velocity 𝒢⁻¹(−P(ρ)_x/(k̃ρ)) given the pressure gradient.
pub fn heat_velocity(rho: f64, pressure_x: f64, p: &MacroParams) -> f64 {
    if pressure_x == 0.0 || rho <= 0.0 {
        return p.v_star;
    }
    p.big_g_inv(-pressure_x / (p.k_tilde * rho))
}

// P′(ρ)ρ_x is differenced as (P(ρ_{i+1}) − P(ρ_i))/dx. Differencing P′ at the mean
// density instead freezes any jump whose mean lies below ρ̄.
fn face_terms(f: &MacroField, pr: &[f64], p: &MacroParams) -> Vec<(f64, f64)> {
    // (flux relative to the moving frame, lab-frame speed) at interior faces
    (0..f.len() - 1)
        .map(|i| {
            let rm = 0.5 * (f.rho[i] + f.rho[i + 1]);
            let v = heat_velocity(rm, (pr[i + 1] - pr[i]) / f.dx, p);
            (rm * (v - p.v_star), v)
        })
        .collect()
}

fn pressures(f: &MacroField, p: &MacroParams) -> Result<Vec<f64>> {
    f.rho.iter().map(|&r| p.pressure(r)).collect()
}

/// Stable explicit step: min of dx²/(2 max D) with D = max(P′(ρ_i), P′(ρ_{i+1}))/(k̃ q̃(v))
/// and dx/max|v − v*| over interior faces.
pub fn heat_stable_dt(f: &MacroField, p: &MacroParams) -> Result<f64> {
    let pr = pressures(f, p)?;
    let faces = face_terms(f, &pr, p);
    let mut dmax = 0.0f64;
    let mut wmax = 0.0f64;
    for (i, (_, v)) in faces.iter().enumerate() {
        let slope = p.dpressure(f.rho[i])?.max(p.dpressure(f.rho[i + 1])?);
        if slope > 0.0 {
            dmax = dmax.max(slope / (p.k_tilde * p.q_tilde(*v)));
        }
        wmax = wmax.max((v - p.v_star).abs());
    }
    let a = if dmax > 0.0 { f.dx * f.dx / (2.0 * dmax) } else { f64::INFINITY };
    let b = if wmax > 0.0 { f.dx / wmax } else { f64::INFINITY };
    Ok(a.min(b).min(f64::MAX))
}

/// Cell-centred lab-frame speeds from centred pressure differences.
pub fn heat_cell_speeds(f: &MacroField, p: &MacroParams) -> Result<Vec<f64>> {
    let pr = pressures(f, p)?;
    let n = f.len();
    Ok((0..n)
        .map(|i| {
            let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
            heat_velocity(f.rho[i], (pr[r] - pr[l]) / ((r - l) as f64 * f.dx), p)
        })
        .collect())
}

/// One explicit conservative step of length dt. The boundary faces carry no
/// relative flux, and the grid origin advances by v*·dt.
pub fn heat_eq_step(f: &MacroField, p: &MacroParams, dt: f64) -> Result<MacroField> {
    if f.rho.iter().any(|r| !(*r >= 0.0 && *r < p.rho_max)) {
        return Err(Error::Membership("density outside [0, rho_max)".into()));
    }
    let limit = heat_stable_dt(f, p)?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::SolverAbort { t: f64::NAN, reason: format!("step {dt:e} exceeds the stability bound {limit:e}") });
    }
    let faces = face_terms(f, &pressures(f, p)?, p);
    let n = f.len();
    let mut rho = f.rho.clone();
    let c = dt / f.dx;
    for i in 0..n {
        let right = if i + 1 < n { faces[i].0 } else { 0.0 };
        let left = if i > 0 { faces[i - 1].0 } else { 0.0 };
        rho[i] -= c * (right - left);
    }
    if let Some(i) = rho.iter().position(|r| *r < 0.0) {
        return Err(Error::SolverAbort { t: f64::NAN, reason: format!("negative density in cell {i}") });
    }
    let mut out = MacroField { x0: f.x0 + p.v_star * dt, dx: f.dx, rho, v: vec![0.0; n] };
    out.v = heat_cell_speeds(&out, p)?;
    Ok(out)
}

pub fn heat_eq_run(f0: MacroField, p: &MacroParams, t_end: f64, sample_dt: f64, cfl: f64) -> Result<FieldHistory> {
    let mut f0 = f0;
    f0.v = heat_cell_speeds(&f0, p)?;
    run_field(f0, t_end, sample_dt, cfl, |f| heat_stable_dt(f, p), |f, dt| heat_eq_step(f, p, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::macrolab::params::PressureLaw;
    use approx::assert_relative_eq;

    fn params() -> MacroParams {
        let mut p = MacroParams::new(100.0, 180.0, 31.0, 120.0, 102.0);
        p.k_tilde = 1.0 / 40.0;
        p.pressure = PressureLaw::GapQuadratic;
        p
    }

    fn bump(x: f64) -> f64 {
        if (0.0..1.0).contains(&x) {
            20.0 + 40.0 * (std::f64::consts::PI * x).sin().powi(2)
        } else {
            0.0
        }
    }

    #[test]
    fn light_traffic_is_pure_transport() {
        let p = params();
        let f = MacroField::sample(-0.5, 1.5, 200, |x| 0.5 * bump(x).min(40.0), |_| 102.0).unwrap();
        let g = heat_eq_step(&f, &p, 1e-3).unwrap();
        assert_eq!(g.rho, f.rho);
        assert_relative_eq!(g.x0, f.x0 + 0.102, max_relative = 1e-12);
        assert!(g.v.iter().all(|v| *v == 102.0));
    }

    #[test]
    fn mass_is_conserved_per_step() {
        let p = params();
        let mut f = MacroField::sample(-0.5, 1.5, 200, bump, |_| 102.0).unwrap();
        let m0 = f.mass();
        for _ in 0..50 {
            let dt = 0.9 * heat_stable_dt(&f, &p).unwrap();
            let g = heat_eq_step(&f, &p, dt).unwrap();
            assert!(((g.mass() - f.mass()) / m0).abs() < 1e-12);
            f = g;
        }
        assert!(f.max_rho() < 60.0);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let p = params();
        let f = MacroField::sample(-0.5, 1.5, 200, bump, |_| 102.0).unwrap();
        let dt = heat_stable_dt(&f, &p).unwrap();
        assert!(heat_eq_step(&f, &p, 2.0 * dt).is_err());
    }

    #[test]
    fn dense_front_runs_ahead() {
        let p = params();
        let f = MacroField::sample(-0.5, 1.5, 200, bump, |_| 102.0).unwrap();
        let v = heat_cell_speeds(&f, &p).unwrap();
        // Density falls towards the front at x ≈ 0.8 and rises at the back at x ≈ 0.2.
        let front = ((0.8 + 0.5) / f.dx) as usize;
        let back = ((0.2 + 0.5) / f.dx) as usize;
        assert!(v[front] > 102.0 && v[back] < 102.0);
    }

    #[test]
    fn dense_edge_spills_into_light_background() {
        let p = params();
        let f = MacroField::sample(0.0, 1.0, 100, |x| if x < 0.5 { 42.0 } else { 20.0 }, |_| 102.0).unwrap();
        let dt = 0.9 * heat_stable_dt(&f, &p).unwrap();
        let g = heat_eq_step(&f, &p, dt).unwrap();
        assert!(g.rho[49] < 42.0 && g.rho[50] > 20.0);
    }
}
