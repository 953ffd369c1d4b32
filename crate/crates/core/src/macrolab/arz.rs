//! ARZ baseline ρ_t + (ρv)_x = 0, v_t + (v + ρF′(ρ))v_x = −k̄(v − F(ρ)), in the
//! conservative variables (ρ, ρs) with s = v − F(ρ). Transport uses the staggered
//! Nessyahu–Tadmor central scheme with minmod slopes; the relaxation source is
//! integrated exactly by Strang splitting.

use serde::{Deserialize, Serialize};

use super::field::{run_field, FieldHistory, MacroField};
use super::lwr::LwrParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArzParams {
    pub law: LwrParams,
    pub k_bar: f64,
}

/// Densities below this count as vacuum, where s is taken as 0.
pub const VACUUM: f64 = 1e-9;

fn speed(ap: &ArzParams, rho: f64, y: f64) -> f64 {
    let s = if rho > VACUUM { y / rho } else { 0.0 };
    (s + ap.law.speed(rho)).max(0.0)
}

fn flux(ap: &ArzParams, u: [f64; 2]) -> [f64; 2] {
    let v = speed(ap, u[0], u[1]);
    [u[0] * v, u[1] * v]
}

/// Largest characteristic speed: max(|v|, |v + ρF′(ρ)|).
fn wave_speed(ap: &ArzParams, u: &[[f64; 2]]) -> f64 {
    u.iter()
        .map(|c| {
            let v = speed(ap, c[0], c[1]);
            v.abs().max((v + c[0].max(0.0) * ap.law.dspeed(c[0])).abs())
        })
        .fold(0.0, f64::max)
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// One staggered NT step of length dt from `u` (padded with two zero-gradient
/// ghosts on each side) to the len+1 midpoints between consecutive entries.
fn nt_stagger(ap: &ArzParams, u: &[[f64; 2]], lam: f64) -> Vec<[f64; 2]> {
    let n = u.len();
    let mut e = Vec::with_capacity(n + 4);
    e.push(u[0]);
    e.push(u[0]);
    e.extend_from_slice(u);
    e.push(u[n - 1]);
    e.push(u[n - 1]);
    let f: Vec<[f64; 2]> = e.iter().map(|c| flux(ap, *c)).collect();
    let m = e.len();
    let mut du = vec![[0.0; 2]; m];
    let mut half = vec![[0.0; 2]; m];
    for j in 1..m - 1 {
        for c in 0..2 {
            du[j][c] = minmod(e[j + 1][c] - e[j][c], e[j][c] - e[j - 1][c]);
            let df = minmod(f[j + 1][c] - f[j][c], f[j][c] - f[j - 1][c]);
            half[j][c] = e[j][c] - 0.5 * lam * df;
        }
    }
    let fh: Vec<[f64; 2]> = half.iter().map(|c| flux(ap, *c)).collect();
    // Midpoints between e[j] and e[j+1] for j = 1..=n+1, i.e. every face of u.
    (1..=n + 1)
        .map(|j| {
            let mut out = [0.0; 2];
            for c in 0..2 {
                out[c] = 0.5 * (e[j][c] + e[j + 1][c]) + 0.125 * (du[j][c] - du[j + 1][c]) - lam * (fh[j + 1][c] - fh[j][c]);
            }
            out
        })
        .collect()
}

pub fn arz_stable_dt(f: &MacroField, ap: &ArzParams) -> f64 {
    let u = to_conservative(f, ap);
    let a = wave_speed(ap, &u);
    if a > 0.0 {
        f.dx / a
    } else {
        f64::MAX
    }
}

fn to_conservative(f: &MacroField, ap: &ArzParams) -> Vec<[f64; 2]> {
    f.rho.iter().zip(&f.v).map(|(&r, &v)| [r, if r > VACUUM { r * (v - ap.law.speed(r)) } else { 0.0 }]).collect()
}

fn relax(u: &mut [[f64; 2]], factor: f64) {
    for c in u.iter_mut() {
        c[1] *= factor;
    }
}

/// Advances by dt: half relaxation, two staggered NT steps of dt/2 (back to the
/// original cells), half relaxation. Errors if (dt/2)·a/dx > 1/2.
pub fn arz_nt_step(f: &MacroField, ap: &ArzParams, dt: f64) -> Result<MacroField> {
    let mut u = to_conservative(f, ap);
    if u.iter().any(|c| !(c[0] >= -1e-12)) {
        let worst = u.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min);
        return Err(Error::Membership(format!("negative density {worst}")));
    }
    let lam = 0.5 * dt / f.dx;
    let decay = (-0.5 * ap.k_bar * dt).exp();
    relax(&mut u, decay);
    let a = wave_speed(ap, &u);
    if a * lam > 0.5 * (1.0 + 1e-12) {
        return Err(Error::SolverAbort { t: f64::NAN, reason: format!("CFL number {} exceeds 1/2", a * lam) });
    }
    let s = nt_stagger(ap, &u, lam);
    if wave_speed(ap, &s) * lam > 0.5 * (1.0 + 1e-9) {
        return Err(Error::SolverAbort { t: f64::NAN, reason: "CFL exceeded on the staggered grid".into() });
    }
    let back = nt_stagger(ap, &s, lam);
    // back[k] is the midpoint of s[k-1], s[k] (with ghosts), i.e. original cell k-1.
    let mut out: Vec<[f64; 2]> = back[1..=u.len()].to_vec();
    relax(&mut out, decay);
    let rho: Vec<f64> = out.iter().map(|c| c[0]).collect();
    let v: Vec<f64> = out.iter().map(|c| speed(ap, c[0], c[1])).collect();
    Ok(MacroField { x0: f.x0, dx: f.dx, rho, v })
}

pub fn arz_run(f0: MacroField, ap: &ArzParams, t_end: f64, sample_dt: f64, cfl: f64) -> Result<FieldHistory> {
    ap.law.validate()?;
    run_field(f0, t_end, sample_dt, cfl, |f| Ok(arz_stable_dt(f, ap)), |f, dt| arz_nt_step(f, ap, dt))
}

/// The Riemann coordinate s = v − F(ρ) per cell.
pub fn riemann_s(f: &MacroField, ap: &ArzParams) -> Vec<f64> {
    f.rho.iter().zip(&f.v).map(|(&r, &v)| v - ap.law.speed(r)).collect()
}
