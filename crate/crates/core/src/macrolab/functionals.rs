//! Mass, total-speed, energy and Riemann-coordinate functionals, in particle
//! quadrature and on grids.

use serde::{Deserialize, Serialize};

use super::field::MacroField;
use super::params::MacroParams;
use super::particles::{gcc_z_of, ParticleEnsemble};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    /// φ̄ per particle (or per cell).
    pub phibar: Vec<f64>,
    /// z = (v − v*σ(r))/c(v) per particle (or per cell).
    pub z: Vec<f64>,
}

/// Particle quadrature: I₁ = m, I₂ = (m/n)Σ𝒢(v_i), I₃ = (m/n)Σ[Θ(v_i) + Φ(ns_i)],
/// I₄ = ½(m/n)Σφ̄_i² with φ̄_i = 𝒢(v_i) + (n/(m k̃))(P(ρ_{s_i}) − P(ρ_{s_{i+1}})),
/// where ρ_s = m/(ns) and the missing gaps at the ends carry no pressure.
pub fn particle_functionals(e: &ParticleEnsemble, p: &MacroParams) -> Result<Functionals> {
    let n = e.n();
    let nf = n as f64;
    let w = e.m / nf;
    let gaps = e.spacings();
    let mut press = vec![0.0; n + 1];
    let mut i3 = 0.0;
    for (k, s) in gaps.iter().enumerate() {
        press[k + 1] = p.pressure(e.m / (nf * s))?;
        i3 += w * p.phi(nf * s)?;
    }
    let mut i2 = 0.0;
    let mut i4 = 0.0;
    let mut phibar = Vec::with_capacity(n);
    for k in 0..n {
        let g = p.big_g(e.v[k]);
        i2 += w * g;
        i3 += w * p.theta(e.v[k]);
        let pb = g + nf / (e.m * p.k_tilde) * (press[k] - press[k + 1]);
        i4 += 0.5 * w * pb * pb;
        phibar.push(pb);
    }
    Ok(Functionals { i1: e.m, i2, i3, i4, phibar, z: gcc_z_of(e, p)? })
}

fn trapezoid(f: &[f64], dx: f64) -> f64 {
    if f.len() < 2 {
        return f.iter().sum::<f64>() * dx;
    }
    dx * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[f.len() - 1]))
}

/// Grid versions by the trapezoid rule; φ̄ = 𝒢(v) + μ(ρ)ρ_x/ρ² with centred ρ_x
/// and z with r = P′(ρ)ρ_x/ρ. Cells with ρ ≤ floor count as vacuum.
pub fn field_functionals(f: &MacroField, p: &MacroParams, floor: f64) -> Result<Functionals> {
    let n = f.len();
    let mut rho_g = vec![0.0; n];
    let mut rho_e = vec![0.0; n];
    let mut rho_pb2 = vec![0.0; n];
    let mut phibar = vec![0.0; n];
    let mut z = vec![0.0; n];
    for i in 0..n {
        let r = f.rho[i];
        if r <= floor {
            continue;
        }
        let v = f.v[i];
        let (l, rr) = (f.rho[i.saturating_sub(1)], f.rho[(i + 1).min(n - 1)]);
        let span = if i == 0 || i + 1 == n { 1.0 } else { 2.0 };
        let rx = (rr - l) / (span * f.dx);
        let g = p.big_g(v);
        let pb = g + p.viscosity(r)? * rx / (r * r);
        rho_g[i] = r * g;
        rho_e[i] = r * (p.theta(v) + p.phi(p.m / r)?);
        rho_pb2[i] = 0.5 * r * pb * pb;
        phibar[i] = pb;
        let rarg = p.dpressure(r)? * rx / r;
        z[i] = (v - p.v_star * p.sigma.eval_pair(rarg).0) / p.c_speed(v);
    }
    Ok(Functionals {
        i1: trapezoid(&f.rho, f.dx),
        i2: trapezoid(&rho_g, f.dx),
        i3: trapezoid(&rho_e, f.dx),
        i4: trapezoid(&rho_pb2, f.dx),
        phibar,
        z,
    })
}

/// Least-squares slope of ln y against t.
pub fn log_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ts.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(t, y)| (*t, y.ln())).collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    num / den
}
