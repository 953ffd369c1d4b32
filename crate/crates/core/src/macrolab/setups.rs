//! Ready-made macroscopic scenarios: the reduced model against LWR on a congestion
//! belt, the traveling-wave run of the inviscid macro-NCC, the macro-PRCC against
//! ARZ, and the functional-decay run of the balanced particle model.

use serde::{Deserialize, Serialize};

use super::arz::{arz_run, ArzParams};
use super::field::{FieldHistory, MacroField, SupportWindow};
use super::functionals::{log_slope, particle_functionals};
use super::heat::heat_eq_run;
use super::lwr::{lwr_run, LwrParams};
use super::meanflow::mean_flow;
use super::ncc_fv::{ncc_fv_run, FarField};
use super::params::{MacroParams, PressureLaw, ViscosityLaw};
use super::particles::{integrate_particles, particle_init, MacroModel, ParticleRun};
use crate::error::{Error, Result};
use crate::microsim::IntegratorConfig;

/// C¹ indicator of [a, b]: 0 outside, 1 on [a + ramp, b − ramp], smoothstep ramps.
pub fn c1_plateau(x: f64, a: f64, b: f64, ramp: f64) -> f64 {
    let step = |t: f64| {
        let t = t.clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    };
    if x <= a || x >= b {
        0.0
    } else {
        step((x - a) / ramp).min(step((b - x) / ramp))
    }
}

/// Reduced model vs LWR on a congestion belt. ρ₀ is a background level on [0, 4] km
/// plus a plateau on [1.5, 2.75] km reaching `rho_peak`; both levels are
/// calibration parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeltSetup {
    pub rho_max: f64,
    pub rho_bar: f64,
    pub k_tilde: f64,
    /// v_max of the reduced model [km/h].
    pub v_max: f64,
    pub rho_background: f64,
    pub rho_peak: f64,
    pub ramp: f64,
    pub dx_heat: f64,
    pub dx_lwr: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub cfl: f64,
    pub lwr: LwrParams,
    pub lwr_domain: (f64, f64),
}

impl Default for BeltSetup {
    fn default() -> Self {
        Self {
            rho_max: 180.0,
            rho_bar: 31.0,
            k_tilde: 1.0 / 40.0,
            v_max: 110.0,
            rho_background: 22.0,
            rho_peak: 50.0,
            ramp: 0.25,
            dx_heat: 0.02,
            dx_lwr: 0.005,
            t_end: 1.0,
            sample_dt: 0.01,
            cfl: 0.9,
            lwr: LwrParams { v_f: 102.0, rho_c: 33.3, a_hat: 2.34 },
            lwr_domain: (0.0, 120.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub label: String,
    /// [veh/h]
    pub mean_flow: f64,
    /// Max density at the final time [veh/km].
    pub max_rho_end: f64,
    pub support_end: SupportWindow,
    pub mass_drift: f64,
}

impl BeltSetup {
    pub fn rho0(&self, x: f64) -> f64 {
        self.rho_background * c1_plateau(x, 0.0, 4.0, self.ramp)
            + (self.rho_peak - self.rho_background) * c1_plateau(x, 1.5, 2.75, self.ramp)
    }

    pub fn floor(&self) -> f64 {
        1e-6 * self.rho_peak.max(self.rho_background)
    }

    pub fn heat_params(&self, v_star: f64) -> MacroParams {
        let mut p = MacroParams::new(1.0, self.rho_max, self.rho_bar, self.v_max, v_star);
        p.pressure = PressureLaw::GapQuadratic;
        p.viscosity = ViscosityLaw::Balanced;
        p.k_tilde = self.k_tilde;
        p
    }

    fn cells(a: f64, b: f64, dx: f64) -> usize {
        ((b - a) / dx).round() as usize
    }

    /// Reduced model on a grid moving with v*, covering [−0.5, 4.5] km initially.
    pub fn run_heat(&self, v_star: f64) -> Result<FieldHistory> {
        let p = self.heat_params(v_star);
        p.validate()?;
        let f0 = MacroField::sample(-0.5, 4.5, Self::cells(-0.5, 4.5, self.dx_heat), |x| self.rho0(x), |_| v_star)?;
        heat_eq_run(f0, &p, self.t_end, self.sample_dt, self.cfl)
    }

    pub fn run_lwr(&self) -> Result<FieldHistory> {
        let (a, b) = self.lwr_domain;
        let f0 = MacroField::sample(a, b, Self::cells(a, b, self.dx_lwr), |x| self.rho0(x), |_| 0.0)?;
        lwr_run(f0, &self.lwr, self.t_end, self.sample_dt, self.cfl)
    }

    pub fn summarize(&self, label: &str, h: &FieldHistory) -> Result<ModelSummary> {
        let first = &h.samples[0].1;
        let last = h.last().ok_or_else(|| Error::InvalidConfig("empty history".into()))?;
        let support_end = last.support(self.floor()).ok_or_else(|| Error::InvalidConfig(format!("{label}: empty support")))?;
        Ok(ModelSummary {
            label: label.to_string(),
            mean_flow: mean_flow(h, self.t_end, self.floor())?,
            max_rho_end: last.max_rho(),
            support_end,
            mass_drift: (last.mass() - first.mass()).abs() / first.mass(),
        })
    }

    /// [reduced model at v* = 102, at v* = 51, LWR].
    pub fn compare(&self) -> Result<Vec<ModelSummary>> {
        Ok(vec![
            self.summarize("heat-eq v*=102", &self.run_heat(102.0)?)?,
            self.summarize("heat-eq v*=51", &self.run_heat(51.0)?)?,
            self.summarize("lwr", &self.run_lwr()?)?,
        ])
    }
}

/// Inviscid macro-NCC with a congestion belt on (0, 1) km in a 25 veh/km stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveSetup {
    pub v_star: f64,
    pub v_max: f64,
    pub rho_bar: f64,
    pub rho_max: f64,
    pub omega_tilde: f64,
    pub window: (f64, f64),
    pub cells: usize,
    pub checkpoints: Vec<f64>,
    pub cfl: f64,
}

impl Default for WaveSetup {
    fn default() -> Self {
        Self {
            v_star: 60.0,
            v_max: 100.0,
            rho_bar: 90.0,
            rho_max: 180.0,
            omega_tilde: 5.0,
            window: (-1.0, 2.0),
            cells: 1500,
            checkpoints: vec![0.0, 0.2, 0.4, 0.8],
            cfl: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveReport {
    pub times: Vec<f64>,
    pub sup_rho: Vec<f64>,
    pub speed_err: Vec<f64>,
    /// e^{−ω̃t}·sup|v₀ − v*|
    pub speed_bound: Vec<f64>,
    /// sup|ρ(t_{k+1}, ·) − ρ(t_k, · − v*(t_{k+1} − t_k))| between consecutive checkpoints.
    pub shift_residual: Vec<f64>,
}

impl WaveSetup {
    pub fn rho0(x: f64) -> f64 {
        25.0 + if x > 0.0 && x < 1.0 { (10.0 * x).powi(2) * (x - 1.0).powi(2) } else { 0.0 }
    }

    pub fn v0(x: f64) -> f64 {
        60.0 + if x > 0.0 && x < 1.0 { (4.0 * x).powi(3) * (x - 1.0).powi(3) } else { 0.0 }
    }

    pub fn params(&self) -> Result<MacroParams> {
        let mut p = MacroParams::new(1.0, self.rho_max, self.rho_bar, self.v_max, self.v_star);
        p.pressure = PressureLaw::GapQuadratic;
        p.with_omega_tilde(self.omega_tilde)
    }

    pub fn far_field(&self) -> FarField {
        FarField { rho: 25.0, v: self.v_star }
    }

    pub fn initial(&self) -> Result<MacroField> {
        MacroField::sample(self.window.0, self.window.1, self.cells, Self::rho0, Self::v0)
    }

    /// Runs to the last checkpoint, sampling every checkpoint spacing's common step.
    pub fn run(&self) -> Result<FieldHistory> {
        let p = self.params()?;
        let t_end = *self.checkpoints.last().ok_or_else(|| Error::InvalidConfig("no checkpoints".into()))?;
        ncc_fv_run(self.initial()?, &p, &self.far_field(), t_end, 0.05, self.cfl)
    }

    pub fn report(&self, h: &FieldHistory) -> Result<WaveReport> {
        let mut snaps = Vec::new();
        for &t in &self.checkpoints {
            snaps.push(h.at(t).ok_or_else(|| Error::InvalidConfig(format!("no sample at t = {t}")))?);
        }
        let err = |f: &MacroField| f.v.iter().map(|v| (v - self.v_star).abs()).fold(0.0, f64::max);
        let e0 = err(snaps[0]);
        // The grid moves with v*, so the shifted comparison is cell by cell.
        let shift_residual = snaps
            .windows(2)
            .map(|w| w[0].rho.iter().zip(&w[1].rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .collect();
        Ok(WaveReport {
            times: self.checkpoints.clone(),
            sup_rho: snaps.iter().map(|f| f.max_rho()).collect(),
            speed_err: snaps.iter().map(|f| err(f)).collect(),
            speed_bound: self.checkpoints.iter().map(|t| (-self.omega_tilde * t).exp() * e0).collect(),
            shift_residual,
        })
    }
}

/// Macro-PRCC particles against ARZ from the same dense platoon, both starting at
/// a uniform speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlatoonSetup {
    pub k_tilde: f64,
    pub v_star: f64,
    pub v_max: f64,
    pub rho_bar: f64,
    pub rho_max: f64,
    pub arz: ArzParams,
    pub rho_plateau: f64,
    /// Common initial speed of both models [km/h].
    pub v_initial: f64,
    pub platoon: (f64, f64),
    pub ramp: f64,
    pub particles: usize,
    pub arz_domain: (f64, f64),
    pub arz_cells: usize,
    pub t_end: f64,
    pub sample_dt: f64,
}

impl Default for PlatoonSetup {
    fn default() -> Self {
        Self {
            k_tilde: 30.0,
            v_star: 33.0,
            v_max: 35.0,
            rho_bar: 63.158,
            rho_max: 120.0,
            // 0.05 s⁻¹
            arz: ArzParams { law: LwrParams { v_f: 33.0, rho_c: 63.158, a_hat: 2.34 }, k_bar: 180.0 },
            rho_plateau: 90.0,
            v_initial: 33.0,
            platoon: (0.0, 1.5),
            ramp: 0.25,
            particles: 100,
            arz_domain: (-2.0, 12.0),
            arz_cells: 1400,
            t_end: 0.25,
            sample_dt: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonReport {
    pub prcc_support_width: f64,
    pub arz_support_width: f64,
    pub prcc_min_speed: f64,
    pub arz_min_speed: f64,
    pub prcc_mass_drift: f64,
    pub arz_mass_drift: f64,
}

impl PlatoonSetup {
    pub fn rho0(&self, x: f64) -> f64 {
        self.rho_plateau * c1_plateau(x, self.platoon.0, self.platoon.1, self.ramp)
    }

    pub fn v0(&self, _x: f64) -> f64 {
        self.v_initial
    }

    pub fn params(&self, m: f64) -> MacroParams {
        let mut p = MacroParams::new(m, self.rho_max, self.rho_bar, self.v_max, self.v_star);
        p.k_tilde = self.k_tilde;
        p.pressure = PressureLaw::LogBarrier { scale: self.v_star * self.v_star * self.k_tilde };
        p.viscosity = ViscosityLaw::Balanced;
        p
    }

    pub fn run_prcc(&self) -> Result<(MacroParams, ParticleRun)> {
        let e0 = particle_init(|x| self.rho0(x), |x| self.v0(x), self.particles, self.platoon, 20_000, None)?;
        let p = self.params(e0.m);
        let icfg = particle_integrator(self.t_end, self.sample_dt);
        let run = integrate_particles(&e0, &p, MacroModel::Prcc, &icfg)?;
        Ok((p, run))
    }

    pub fn run_arz(&self) -> Result<FieldHistory> {
        let f0 = MacroField::sample(self.arz_domain.0, self.arz_domain.1, self.arz_cells, |x| self.rho0(x), |x| self.v0(x))?;
        arz_run(f0, &self.arz, self.t_end, self.sample_dt, 0.45)
    }

    pub fn report(&self) -> Result<PlatoonReport> {
        let (_, prcc) = self.run_prcc()?;
        let arz = self.run_arz()?;
        let pe = &prcc.samples.last().ok_or_else(|| Error::InvalidConfig("empty particle run".into()))?.1;
        let floor = 1e-6 * self.rho_plateau;
        let af = arz.last().ok_or_else(|| Error::InvalidConfig("empty ARZ run".into()))?;
        let arz_support = af.support(floor).ok_or_else(|| Error::InvalidConfig("ARZ support vanished".into()))?;
        let prcc_min = prcc.samples.iter().flat_map(|(_, e)| e.v.iter().cloned()).fold(f64::INFINITY, f64::min);
        let arz_min = arz
            .samples
            .iter()
            .flat_map(|(_, f)| f.rho.iter().zip(&f.v).filter(|(r, _)| **r > floor).map(|(_, v)| *v).collect::<Vec<_>>())
            .fold(f64::INFINITY, f64::min);
        let m0 = arz.samples[0].1.mass();
        Ok(PlatoonReport {
            prcc_support_width: pe.x[0] - pe.x[pe.n() - 1],
            arz_support_width: arz_support.width(),
            prcc_min_speed: prcc_min,
            arz_min_speed: arz_min,
            prcc_mass_drift: (pe.m - prcc.samples[0].1.m).abs() / prcc.samples[0].1.m,
            arz_mass_drift: (af.mass() - m0).abs() / m0,
        })
    }
}

/// Adaptive Heun settings for particle runs (times in h).
pub fn particle_integrator(t_end: f64, sample_dt: f64) -> IntegratorConfig {
    IntegratorConfig {
        tol_abs: 1e-8,
        tol_rel: 1e-8,
        h_init: 1e-8,
        h_min: 1e-14,
        h_max: sample_dt,
        safety_margin: 0.1,
        t_end,
        sample_dt,
        seed: 0,
    }
}

/// Balanced macro-PRCC particles: I₂ and I₄ decay at k̃ and 2k̃.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecaySetup {
    pub particles: usize,
    pub horizon_in_relaxation_times: f64,
    pub samples: usize,
    pub tol: f64,
}

impl Default for DecaySetup {
    fn default() -> Self {
        Self { particles: 400, horizon_in_relaxation_times: 3.0, samples: 30, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub k_tilde: f64,
    pub times: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub i3: Vec<f64>,
    pub i4: Vec<f64>,
    pub sup_phibar: Vec<f64>,
    pub rate_i2: f64,
    pub rate_i4: f64,
    pub rate_phibar: f64,
}

impl DecaySetup {
    pub fn rho0(x: f64) -> f64 {
        45.0 + 35.0 * (std::f64::consts::PI * x).sin().powi(2)
    }

    pub fn v0(x: f64) -> f64 {
        30.0 + 2.0 * (std::f64::consts::PI * x).sin().powi(2)
    }

    pub fn simulate(&self) -> Result<(MacroParams, ParticleRun)> {
        let base = PlatoonSetup::default();
        let e0 = particle_init(Self::rho0, Self::v0, self.particles, (0.0, 1.0), 20_000, None)?;
        let p = base.params(e0.m);
        let t_end = self.horizon_in_relaxation_times / p.k_tilde;
        let mut icfg = particle_integrator(t_end, t_end / self.samples as f64);
        icfg.tol_abs = self.tol;
        icfg.tol_rel = self.tol;
        let run = integrate_particles(&e0, &p, MacroModel::Prcc, &icfg)?;
        Ok((p, run))
    }

    pub fn run(&self) -> Result<DecayReport> {
        let (p, run) = self.simulate()?;
        let mut rep = DecayReport {
            k_tilde: p.k_tilde,
            times: vec![],
            i1: vec![],
            i2: vec![],
            i3: vec![],
            i4: vec![],
            sup_phibar: vec![],
            rate_i2: 0.0,
            rate_i4: 0.0,
            rate_phibar: 0.0,
        };
        for (t, e) in &run.samples {
            let f = particle_functionals(e, &p)?;
            rep.times.push(*t);
            rep.i1.push(f.i1);
            rep.i2.push(f.i2);
            rep.i3.push(f.i3);
            rep.i4.push(f.i4);
            rep.sup_phibar.push(f.phibar.iter().map(|x| x.abs()).fold(0.0, f64::max));
        }
        let abs_i2: Vec<f64> = rep.i2.iter().map(|x| x.abs()).collect();
        rep.rate_i2 = -log_slope(&rep.times, &abs_i2);
        rep.rate_i4 = -log_slope(&rep.times, &rep.i4);
        rep.rate_phibar = -log_slope(&rep.times, &rep.sup_phibar);
        Ok(rep)
    }
}
