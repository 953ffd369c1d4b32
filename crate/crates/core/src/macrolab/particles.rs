//! Particle discretisations of the macroscopic models: n equal-mass particles
//! x_1 > x_2 > … > x_n whose ODEs are the lane-based closed loops with the
//! scaled potential Φ(ns) and kernel n²K(ns).

use serde::{Deserialize, Serialize};

use super::params::MacroParams;
use crate::error::{Error, Result};
use crate::microsim::{integrate_guarded, GuardedSystem, IntegratorConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    /// Total mass [veh].
    pub m: f64,
    /// Positions [km], strictly decreasing.
    pub x: Vec<f64>,
    /// Speeds [km/h].
    pub v: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// s_i = x_{i−1} − x_i for i = 2..n (index 0 holds s_2).
    pub fn spacings(&self) -> Vec<f64> {
        self.x.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// Local densities m/(n s_i) of the gaps, index 0 for s_2.
    pub fn gap_densities(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.spacings().iter().map(|s| self.m / (n * s)).collect()
    }

    pub fn validate(&self, p: &MacroParams) -> Result<()> {
        if self.x.len() != self.v.len() {
            return Err(Error::DimensionMismatch { expected: self.x.len(), got: self.v.len() });
        }
        let n = self.n() as f64;
        for (k, s) in self.spacings().iter().enumerate() {
            if !(n * s > p.l()) {
                return Err(Error::Membership(format!("particle gap {} has n·s = {} <= L = {}", k + 2, n * s, p.l())));
            }
        }
        for (k, v) in self.v.iter().enumerate() {
            if !(*v > 0.0 && *v < p.v_max) {
                return Err(Error::Membership(format!("particle {} has speed {v} outside (0, v_max)", k + 1)));
            }
        }
        Ok(())
    }
}

/// Equal-mass particles at the (i−½)/n quantiles of ρ₀ on `window`, counted from
/// the front. The CDF is the trapezoid integral of ρ₀ on `grid` intervals and is
/// inverted by bisection.
pub fn particle_init(
    rho0: impl Fn(f64) -> f64,
    v0: impl Fn(f64) -> f64,
    n: usize,
    window: (f64, f64),
    grid: usize,
    p_l: Option<f64>,
) -> Result<ParticleEnsemble> {
    let (a, b) = window;
    if !(b > a) || grid < 2 || n < 2 {
        return Err(Error::InvalidConfig("particle_init needs a > b, grid >= 2, n >= 2".into()));
    }
    let h = (b - a) / grid as f64;
    let rho: Vec<f64> = (0..=grid).map(|k| rho0(a + k as f64 * h)).collect();
    if rho.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidConfig("initial density must be non-negative".into()));
    }
    let mut cdf = vec![0.0; grid + 1];
    for k in 0..grid {
        cdf[k + 1] = cdf[k] + 0.5 * h * (rho[k] + rho[k + 1]);
    }
    let m = cdf[grid];
    if !(m > 0.0) {
        return Err(Error::InvalidConfig("initial density has zero total mass".into()));
    }
    // Exact integral of the piecewise-linear interpolant up to x.
    let cum = |x: f64| -> f64 {
        let s = ((x - a) / h).clamp(0.0, grid as f64);
        let k = (s.floor() as usize).min(grid - 1);
        let d = (s - k as f64) * h;
        cdf[k] + rho[k] * d + (rho[k + 1] - rho[k]) * d * d / (2.0 * h)
    };
    let mut x = Vec::with_capacity(n);
    for i in 0..n {
        let target = m * (1.0 - (i as f64 + 0.5) / n as f64);
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cum(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
                break;
            }
        }
        x.push(0.5 * (lo + hi));
    }
    let v: Vec<f64> = x.iter().map(|&xi| v0(xi)).collect();
    let e = ParticleEnsemble { m, x, v };
    if let Some(l) = p_l {
        let nn = n as f64;
        if let Some(k) = e.spacings().iter().position(|s| !(nn * s > l)) {
            return Err(Error::Membership(format!("initial gap {} violates n·s > L", k + 2)));
        }
    }
    Ok(e)
}

/// n Φ′(n s) for the gap ahead of each particle (zero for the leader), plus a
/// trailing zero for the gap behind the last particle.
fn scaled_dphi(x: &[f64], p: &MacroParams) -> Result<Vec<f64>> {
    let n = x.len();
    let nf = n as f64;
    let mut out = vec![0.0; n + 1];
    for k in 1..n {
        out[k] = nf * p.dphi(nf * (x[k - 1] - x[k]))?;
    }
    Ok(out)
}

fn scaled_kernel(x: &[f64], p: &MacroParams) -> Result<Vec<f64>> {
    let n = x.len();
    let nf = n as f64;
    let mut out = vec![0.0; n + 1];
    for k in 1..n {
        out[k] = nf * nf * p.kernel(nf * (x[k - 1] - x[k]))?;
    }
    Ok(out)
}

/// Pressure and viscous force per particle: n(Φ′(ns_i) − Φ′(ns_{i+1})) +
/// n²(K(ns_i)(g(v_{i−1}) − g(v_i)) + K(ns_{i+1})(g(v_{i+1}) − g(v_i))),
/// with the missing neighbour terms dropped at the ends.
pub fn particle_forces(x: &[f64], v: &[f64], p: &MacroParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    let dphi = scaled_dphi(x, p)?;
    let kern = scaled_kernel(x, p)?;
    let g: Vec<f64> = v.iter().map(|&vi| p.g.g(vi)).collect();
    let mut pressure = vec![0.0; n];
    let mut visc = vec![0.0; n];
    for k in 0..n {
        pressure[k] = dphi[k] - dphi[k + 1];
        if k > 0 {
            visc[k] += kern[k] * (g[k - 1] - g[k]);
        }
        if k + 1 < n {
            visc[k] += kern[k + 1] * (g[k + 1] - g[k]);
        }
    }
    Ok((pressure, visc))
}

/// Accelerations of the pseudo-relativistic particle model.
pub fn particle_rhs_prcc(e: &ParticleEnsemble, p: &MacroParams) -> Result<Vec<f64>> {
    let (pressure, visc) = particle_forces(&e.x, &e.v, p)?;
    e.v.iter()
        .enumerate()
        .map(|(k, &v)| {
            let q = p.q_tilde(v);
            if !(q > 0.0) {
                return Err(Error::Domain { what: "q̃", value: q });
            }
            Ok((-p.relaxation(v) + pressure[k] + visc[k]) / q)
        })
        .collect()
}

/// Accelerations of the Newtonian particle model: −J(G̃_i)(v_i − v*) + G̃_i.
pub fn particle_rhs_ncc(e: &ParticleEnsemble, p: &MacroParams) -> Result<Vec<f64>> {
    let (pressure, visc) = particle_forces(&e.x, &e.v, p)?;
    Ok(e.v
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let gt = pressure[k] + visc[k];
            -p.j_gain(gt) * (v - p.v_star) + gt
        })
        .collect())
}

/// r_i = n(Φ′(ns_{i+1}) − Φ′(ns_i)), the argument of σ in the generalized model.
pub fn gcc_r(x: &[f64], p: &MacroParams) -> Result<Vec<f64>> {
    let dphi = scaled_dphi(x, p)?;
    Ok((0..x.len()).map(|k| dphi[k + 1] - dphi[k]).collect())
}

/// z = (v − w)/c(v).
pub fn gcc_z(v: f64, w: f64, p: &MacroParams) -> f64 {
    (v - w) / p.c_speed(v)
}

/// Solves (v − w)/c(v) = z for v ∈ (0, v_max) by bisection; the map is strictly
/// increasing for w ∈ (0, v_max).
pub fn gcc_speed(z: f64, w: f64, p: &MacroParams) -> Result<f64> {
    if !(w > 0.0 && w < p.v_max) || !z.is_finite() {
        return Err(Error::Domain { what: "transformed speed", value: z });
    }
    let (mut lo, mut hi) = (0.0, p.v_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gcc_z(mid, w, p) < z {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * p.v_max {
            break;
        }
    }
    let v = 0.5 * (lo + hi);
    if !(v > 0.0 && v < p.v_max) {
        return Err(Error::Domain { what: "recovered speed", value: v });
    }
    Ok(v)
}

/// Speeds recovered from z, and ż_i = −γ c(v_i)/v_max² · (v_i − v*σ(r_i) + r_i/γ).
pub fn particle_rhs_gcc(x: &[f64], z: &[f64], p: &MacroParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = gcc_r(x, p)?;
    let mut v = Vec::with_capacity(x.len());
    let mut zdot = Vec::with_capacity(x.len());
    let vm2 = p.v_max * p.v_max;
    for k in 0..x.len() {
        let w = p.v_star * p.sigma.eval_pair(r[k]).0;
        let vk = gcc_speed(z[k], w, p)?;
        zdot.push(-p.gamma * p.c_speed(vk) / vm2 * (vk - w + r[k] / p.gamma));
        v.push(vk);
    }
    Ok((v, zdot))
}

/// Transformed variables of an ensemble for the generalized model.
pub fn gcc_z_of(e: &ParticleEnsemble, p: &MacroParams) -> Result<Vec<f64>> {
    let r = gcc_r(&e.x, p)?;
    Ok(e.v.iter().zip(&r).map(|(&v, &rk)| gcc_z(v, p.v_star * p.sigma.eval_pair(rk).0, p)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MacroModel {
    Prcc,
    Ncc,
    Gcc,
}

/// Particle model as a guarded ODE on [x, v] (or [x, z] for the generalized model).
pub struct ParticleSystem<'a> {
    pub params: &'a MacroParams,
    pub model: MacroModel,
    pub m: f64,
}

impl ParticleSystem<'_> {
    /// Ensemble with speeds from a packed state.
    pub fn ensemble(&self, y: &[f64]) -> Result<ParticleEnsemble> {
        let n = y.len() / 2;
        let x = y[..n].to_vec();
        let v = match self.model {
            MacroModel::Gcc => particle_rhs_gcc(&x, &y[n..], self.params)?.0,
            _ => y[n..].to_vec(),
        };
        Ok(ParticleEnsemble { m: self.m, x, v })
    }

    pub fn pack(&self, e: &ParticleEnsemble) -> Result<Vec<f64>> {
        let mut y = e.x.clone();
        match self.model {
            MacroModel::Gcc => y.extend(gcc_z_of(e, self.params)?),
            _ => y.extend(e.v.iter().cloned()),
        }
        Ok(y)
    }
}

impl GuardedSystem for ParticleSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = y.len() / 2;
        let x = &y[..n];
        let (v, dv) = match self.model {
            MacroModel::Gcc => particle_rhs_gcc(x, &y[n..], self.params)?,
            MacroModel::Prcc | MacroModel::Ncc => {
                let e = ParticleEnsemble { m: self.m, x: x.to_vec(), v: y[n..].to_vec() };
                if e.v.iter().any(|v| !(*v > 0.0 && *v < self.params.v_max)) {
                    return Err(Error::Membership("particle speed left (0, v_max)".into()));
                }
                let dv = if self.model == MacroModel::Prcc {
                    particle_rhs_prcc(&e, self.params)?
                } else {
                    particle_rhs_ncc(&e, self.params)?
                };
                (e.v, dv)
            }
        };
        let mut out = v;
        out.extend(dv);
        Ok(out)
    }

    fn margins(&self, y: &[f64]) -> Result<Vec<f64>> {
        let n = y.len() / 2;
        let e = self.ensemble(y)?;
        let nf = n as f64;
        let l = self.params.l();
        let mut out: Vec<f64> = e.spacings().iter().map(|s| nf * s - l).collect();
        for v in &e.v {
            out.push(*v);
            out.push(self.params.v_max - v);
        }
        Ok(out)
    }

    fn margin_name(&self, y: &[f64], k: usize) -> String {
        let n = y.len() / 2;
        if k + 1 < n {
            format!("gap {}", k + 2)
        } else {
            let j = k + 1 - n;
            format!("{} speed bound of particle {}", if j % 2 == 0 { "lower" } else { "upper" }, j / 2 + 1)
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParticleRun {
    pub samples: Vec<(f64, ParticleEnsemble)>,
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates a particle model with the guarded adaptive Heun scheme.
pub fn integrate_particles(e0: &ParticleEnsemble, p: &MacroParams, model: MacroModel, icfg: &IntegratorConfig) -> Result<ParticleRun> {
    e0.validate(p)?;
    let sys = ParticleSystem { params: p, model, m: e0.m };
    let y0 = sys.pack(e0)?;
    let run = integrate_guarded(&sys, &y0, 0.0, icfg, |_, _| true)?;
    let samples = run
        .samples
        .iter()
        .map(|(t, y)| Ok((*t, sys.ensemble(y)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ParticleRun { samples, accepted: run.accepted, rejected: run.rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::macrolab::params::{PressureLaw, ViscosityLaw};
    use approx::assert_relative_eq;

    fn prcc_params(m: f64) -> MacroParams {
        let mut p = MacroParams::new(m, 120.0, 63.158, 35.0, 33.0);
        p.k_tilde = 30.0;
        p.pressure = PressureLaw::LogBarrier { scale: 33.0 * 33.0 * 30.0 };
        p.viscosity = ViscosityLaw::Balanced;
        p
    }

    #[test]
    fn uniform_density_gives_equal_spacing() {
        let e = particle_init(|_| 50.0, |_| 30.0, 10, (0.0, 1.0), 1000, None).unwrap();
        assert_relative_eq!(e.m, 50.0, max_relative = 1e-12);
        for (i, x) in e.x.iter().enumerate() {
            assert_relative_eq!(*x, 1.0 - (i as f64 + 0.5) / 10.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mass_is_the_trapezoid_integral() {
        let rho = |x: f64| 20.0 + 10.0 * (3.0 * x).sin().powi(2);
        let grid = 4000;
        let e = particle_init(rho, |_| 30.0, 50, (0.0, 2.0), grid, None).unwrap();
        let h = 2.0 / grid as f64;
        let trap: f64 = (0..grid).map(|k| 0.5 * h * (rho(k as f64 * h) + rho((k + 1) as f64 * h))).sum();
        assert_relative_eq!(e.m, trap, max_relative = 1e-10);
    }

    #[test]
    fn reconstructed_density_matches_profile() {
        let rho = |x: f64| 30.0 + 20.0 * (std::f64::consts::PI * x).sin().powi(2);
        let e = particle_init(rho, |_| 30.0, 1000, (0.0, 1.0), 20000, None).unwrap();
        let dens = e.gap_densities();
        for k in 10..dens.len() - 10 {
            let xm = 0.5 * (e.x[k] + e.x[k + 1]);
            assert!((dens[k] / rho(xm) - 1.0).abs() < 0.05, "gap {k}: {} vs {}", dens[k], rho(xm));
        }
    }

    #[test]
    fn equilibrium_ensembles_are_at_rest() {
        let mut p = prcc_params(10.0);
        let n = 20;
        // n·s = 2λ for every gap.
        let s = 2.0 * p.lambda() / n as f64;
        let e = ParticleEnsemble { m: p.m, x: (0..n).map(|i| -(i as f64) * s).collect(), v: vec![33.0; n] };
        assert!(particle_rhs_prcc(&e, &p).unwrap().iter().all(|a| *a == 0.0));
        p = p.with_omega_tilde(5.0).unwrap();
        assert!(particle_rhs_ncc(&e, &p).unwrap().iter().all(|a| *a == 0.0));
        let z = gcc_z_of(&e, &p).unwrap();
        let (v, zd) = particle_rhs_gcc(&e.x, &z, &p).unwrap();
        for (vk, zk) in v.iter().zip(&zd) {
            assert_relative_eq!(*vk, 33.0, max_relative = 1e-12);
            assert!(zk.abs() < 1e-12);
        }
    }

    #[test]
    fn free_ncc_particles_relax_at_omega() {
        let p = prcc_params(10.0).with_omega_tilde(5.0).unwrap();
        let n = 5;
        let s = 2.0 * p.lambda() / n as f64;
        let e = ParticleEnsemble { m: p.m, x: (0..n).map(|i| -(i as f64) * s).collect(), v: vec![20.0, 25.0, 30.0, 33.0, 34.0] };
        let a = particle_rhs_ncc(&e, &p).unwrap();
        for (ak, vk) in a.iter().zip(&e.v) {
            assert_relative_eq!(*ak, -p.omega_tilde() * (vk - 33.0), max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn inviscid_prcc_is_local() {
        let mut p = prcc_params(60.0);
        p.viscosity = ViscosityLaw::Zero;
        let n = 30;
        let e = particle_init(|x| 50.0 + 30.0 * (-(x - 0.5f64).powi(2) * 20.0).exp(), |x| 20.0 + 5.0 * x, n, (0.0, 1.0), 4000, Some(p.l())).unwrap();
        let a0 = particle_rhs_prcc(&e, &p).unwrap();
        let mut e2 = e.clone();
        e2.v[20] = 31.0;
        e2.v[3] = 10.0;
        let a1 = particle_rhs_prcc(&e2, &p).unwrap();
        for k in 0..n {
            if k != 20 && k != 3 {
                assert_eq!(a0[k], a1[k]);
            }
        }
    }

    #[test]
    fn transformed_speed_inverts() {
        let p = prcc_params(10.0);
        for (v, w) in [(1.0, 33.0), (17.5, 20.0), (34.9, 1.0), (33.0, 33.0)] {
            let z = gcc_z(v, w, &p);
            assert_relative_eq!(gcc_speed(z, w, &p).unwrap(), v, max_relative = 1e-12);
        }
    }
}
