//! Adaptive Euler/Heun integration of the closed-loop fleet with a constraint
//! guard, scenario presets and the closed-form lane-based solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::{
    closed_loop_rhs, control, lane_ncc_rhs, ControlOutput, ControllerConfig, Family, LaneConfig, LaneState,
};
use crate::error::{Error, Result};
use crate::fleet::{margins, Corridor, FleetConfig, FleetState, HermiteCurve, Margin, RoadSpec, VehicleState};
use crate::shapes::{
    BoundaryPotential, MonotoneG, Relaxation, RelaxationPair, SaturationEll, SigmaShaper, VehiclePotential,
    ViscosityKernel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub safety_margin: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub seed: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            tol_abs: 1e-7,
            tol_rel: 1e-7,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 0.1,
            safety_margin: 0.1,
            t_end: 60.0,
            sample_dt: 0.1,
            seed: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.h_min && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(Error::InvalidConfig("step bounds must satisfy 0 < h_min <= h_init <= h_max".into()));
        }
        if !(self.tol_abs > 0.0 && self.tol_rel > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.safety_margin > 0.0 && self.safety_margin < 1.0) {
            return Err(Error::InvalidConfig("safety_margin must lie in (0, 1)".into()));
        }
        if !(self.t_end > 0.0 && self.sample_dt > 0.0) {
            return Err(Error::InvalidConfig("t_end and sample_dt must be positive".into()));
        }
        Ok(())
    }
}

/// A system of ODEs whose state must stay inside an open set described by
/// positive margins.
pub trait GuardedSystem {
    fn rhs(&self, t: f64, y: &[f64]) -> Result<Vec<f64>>;
    /// All constraint margins (positive inside), in a fixed order.
    fn margins(&self, y: &[f64]) -> Result<Vec<f64>>;
    fn margin_name(&self, y: &[f64], k: usize) -> String {
        let _ = y;
        format!("constraint {k}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct OdeRun {
    pub samples: Vec<(f64, Vec<f64>)>,
    pub events: Vec<Event>,
    pub accepted: usize,
    pub rejected: usize,
}

/// Embedded Euler/Heun integration with error control and a constraint guard.
/// `on_accept` sees every accepted step (t, y) and may stop the run early by
/// returning false.
pub fn integrate_guarded<S: GuardedSystem>(
    sys: &S,
    y0: &[f64],
    t0: f64,
    icfg: &IntegratorConfig,
    mut on_accept: impl FnMut(f64, &[f64]) -> bool,
) -> Result<OdeRun> {
    icfg.validate()?;
    let t_end = t0 + icfg.t_end;
    let mut run = OdeRun::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut marg = sys.margins(&y)?;
    if let Some(k) = marg.iter().position(|m| !(*m > 0.0)) {
        return Err(Error::Membership(format!("initial state violates {}", sys.margin_name(&y, k))));
    }
    let mut k1 = sys.rhs(t, &y)?;
    let mut h = icfg.h_init;
    let mut next_sample = 0usize;
    let sample_time = |k: usize| t0 + k as f64 * icfg.sample_dt;
    run.samples.push((t, y.clone()));
    next_sample += 1;
    on_accept(t, &y);
    let dim = y.len();
    let mut ye = vec![0.0; dim];
    let mut yh = vec![0.0; dim];
    while t < t_end - 1e-12 * t_end.abs().max(1.0) {
        // Steps are clipped to land on sample times, so samples are exact step ends.
        let h_try = h.min(t_end - t).min((sample_time(next_sample) - t).max(1e-3 * icfg.h_min));
        let clipped = h_try < h;
        for i in 0..dim {
            ye[i] = y[i] + h_try * k1[i];
        }
        let mut reason = String::new();
        let mut ok = false;
        let mut k2_opt = None;
        match sys.rhs(t + h_try, &ye) {
            Ok(k2) => {
                for i in 0..dim {
                    yh[i] = y[i] + 0.5 * h_try * (k1[i] + k2[i]);
                }
                let mut worst = 0.0f64;
                let mut err_ok = true;
                for i in 0..dim {
                    let err = (yh[i] - ye[i]).abs();
                    let tol = icfg.tol_abs + icfg.tol_rel * y[i].abs().max(yh[i].abs());
                    worst = worst.max(err / tol);
                    if !(err <= tol) {
                        err_ok = false;
                    }
                }
                if !err_ok {
                    reason = format!("error ratio {worst:.3e}");
                } else {
                    match sys.margins(&yh) {
                        Ok(mnew) => {
                            match mnew
                                .iter()
                                .zip(marg.iter())
                                .position(|(mn, mo)| !(*mn > 0.0 && *mn >= icfg.safety_margin * mo))
                            {
                                Some(kbad) => {
                                    reason = format!("guard on {}", sys.margin_name(&yh, kbad));
                                    run.events.push(Event {
                                        t,
                                        kind: "guard".into(),
                                        detail: reason.clone(),
                                    });
                                }
                                None => {
                                    ok = true;
                                    marg = mnew;
                                    k2_opt = Some((k2, worst));
                                }
                            }
                        }
                        Err(e) => reason = format!("margins: {e}"),
                    }
                }
            }
            Err(e) => reason = format!("stage evaluation: {e}"),
        }
        if !ok {
            run.rejected += 1;
            run.events.push(Event { t, kind: "reject".into(), detail: format!("h = {h_try:.3e}; {reason}") });
            h = 0.5 * h_try;
            if h < icfg.h_min {
                return Err(Error::SolverAbort { t, reason });
            }
            continue;
        }
        let (_, worst) = k2_opt.expect("accepted step has a stage");
        let t_new = t + h_try;
        // Dense output by linear interpolation between accepted steps.
        while sample_time(next_sample) <= t_new + 1e-9 * icfg.sample_dt && sample_time(next_sample) <= t_end + 1e-9 * icfg.sample_dt {
            let ts = sample_time(next_sample);
            let w = ((ts - t) / h_try).clamp(0.0, 1.0);
            let ys: Vec<f64> = y.iter().zip(yh.iter()).map(|(a, b)| a + w * (b - a)).collect();
            run.samples.push((ts, ys));
            next_sample += 1;
        }
        std::mem::swap(&mut y, &mut yh);
        t = t_new;
        run.accepted += 1;
        if !on_accept(t, &y) {
            break;
        }
        k1 = sys.rhs(t, &y)?;
        let grow = if worst > 0.0 { (0.9 / worst.sqrt()).clamp(0.5, 2.0) } else { 2.0 };
        h = if clipped { h } else { (h_try * grow).min(icfg.h_max).max(icfg.h_min) };
    }
    Ok(run)
}

/// The closed-loop fleet as a guarded system.
pub struct FleetSystem<'a> {
    pub fleet: &'a FleetConfig,
    pub ctrl: &'a ControllerConfig,
    pub road: &'a RoadSpec,
}

impl FleetSystem<'_> {
    fn margin_list(&self, y: &[f64]) -> Result<Vec<Margin>> {
        margins(&FleetState::from_slice(0.0, y), self.fleet, self.road)
    }
}

impl GuardedSystem for FleetSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        Ok(closed_loop_rhs(&FleetState::from_slice(t, y), self.fleet, self.ctrl, self.road)?.0)
    }

    fn margins(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.margin_list(y)?.into_iter().map(|m| m.value).collect())
    }

    fn margin_name(&self, y: &[f64], k: usize) -> String {
        self.margin_list(y).map(|m| m[k].to_string()).unwrap_or_else(|_| format!("constraint {k}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: FleetState,
    pub control: ControlOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Integrates the closed loop from `w0`; samples carry the control evaluated at
/// the sampled state.
pub fn integrate(w0: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig, road: &RoadSpec, icfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_with(w0, fleet, ctrl, road, icfg, |_, _| true)
}

pub fn integrate_with(
    w0: &FleetState,
    fleet: &FleetConfig,
    ctrl: &ControllerConfig,
    road: &RoadSpec,
    icfg: &IntegratorConfig,
    on_accept: impl FnMut(f64, &[f64]) -> bool,
) -> Result<Trajectory> {
    let sys = FleetSystem { fleet, ctrl, road };
    let run = integrate_guarded(&sys, &w0.to_vec(), w0.t, icfg, on_accept)?;
    let mut samples = Vec::with_capacity(run.samples.len());
    for (t, y) in run.samples {
        let state = FleetState::from_slice(t, &y);
        let control = control(&state, fleet, ctrl, road)?;
        samples.push(Sample { t, state, control });
    }
    Ok(Trajectory { samples, events: run.events, accepted_steps: run.accepted, rejected_steps: run.rejected })
}

struct LaneSystem<'a> {
    cfg: &'a LaneConfig,
    n: usize,
}

impl GuardedSystem for LaneSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64]) -> Result<Vec<f64>> {
        Ok(lane_ncc_rhs(&LaneState::from_slice(self.n, y), self.cfg)?.to_vec())
    }

    fn margins(&self, y: &[f64]) -> Result<Vec<f64>> {
        let l = self.cfg.potential.blow_up();
        let mut m: Vec<f64> = y[..self.n - 1].iter().map(|s| s - l).collect();
        for &v in &y[self.n - 1..] {
            m.push(v);
            m.push(self.cfg.v_max - v);
        }
        Ok(m)
    }
}

pub fn integrate_lane(init: &LaneState, cfg: &LaneConfig, icfg: &IntegratorConfig) -> Result<Vec<(f64, LaneState)>> {
    let n = init.v.len();
    let sys = LaneSystem { cfg, n };
    let run = integrate_guarded(&sys, &init.to_vec(), 0.0, icfg, |_, _| true)?;
    Ok(run.samples.into_iter().map(|(t, y)| (t, LaneState::from_slice(n, &y))).collect())
}

/// Closed-form lane solution v_i(t) = v* + e^{−ω̄t}(v_i(0) − v*),
/// s_i(t) = s_i(0) + ω̄⁻¹(v_{i−1}(0) − v_i(0))(1 − e^{−ω̄t}), valid when every
/// spacing starts and stays beyond the interaction radius.
pub fn prop1_oracle(init: &LaneState, cfg: &LaneConfig, times: &[f64]) -> Result<Vec<(f64, LaneState)>> {
    let n = init.v.len();
    if init.s.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n.saturating_sub(1), got: init.s.len() });
    }
    let w = cfg.omega_bar();
    let lam = cfg.potential.cutoff();
    let bad: Vec<String> = (1..n)
        .filter(|&i| {
            let need = (lam - (init.v[i - 1] - init.v[i]) / w).max(lam);
            init.s[i - 1] < need
        })
        .map(|i| format!("s_{}", i + 1))
        .collect();
    if !bad.is_empty() {
        return Err(Error::InvalidConfig(format!("closed form hypothesis fails for {}", bad.join(", "))));
    }
    Ok(times
        .iter()
        .map(|&t| {
            let e = (-w * t).exp();
            let v = init.v.iter().map(|v0| cfg.v_star + e * (v0 - cfg.v_star)).collect();
            let s = (1..n).map(|i| init.s[i - 1] + (init.v[i - 1] - init.v[i]) / w * (1.0 - e)).collect();
            (t, LaneState { s, v })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub w0: FleetState,
    pub fleet: FleetConfig,
    pub ctrl: ControllerConfig,
    pub road: RoadSpec,
    pub icfg: IntegratorConfig,
}

pub const PRESETS: [&str; 7] = [
    "ncc-viscous",
    "ncc-inviscid",
    "prcc-viscous",
    "prcc-inviscid",
    "gcc-offramp",
    "gcc-bottleneck-symmetric",
    "gcc-bottleneck-perturbed",
];

fn lane_free_ctrl(family: Family, viscous: bool) -> ControllerConfig {
    let (z1, z2) = match family {
        Family::Prcc => (0.01, 0.1),
        _ => (1e-4, 0.03),
    };
    ControllerConfig {
        family,
        v_star: vec![30.0],
        gamma: 0.1,
        big_gamma: 0.5,
        b: 1.0,
        a_pen: 1.0,
        potential: VehiclePotential::rational_cubic(z1, 5.59, 25.0),
        boundary: BoundaryPotential::quartic(7.2, 1.5),
        kernel: viscous.then(|| ViscosityKernel::quadratic(z2, 5.59, 25.0)),
        ell: SaturationEll::hinge(0.2),
        g: MonotoneG::Identity,
        relax: RelaxationPair { f: Relaxation::Linear { k: 0.5 }, fbar: Relaxation::Linear { k: 2.0 } },
        sigma: SigmaShaper::new(0.001, 1.0),
    }
}

/// Box sampling of initial states with rejection until pairwise spacing ≥ 1.2 L.
pub fn random_fleet(
    rng: &mut ChaCha8Rng,
    fleet: &FleetConfig,
    x_len: f64,
    y_half: f64,
    speed: (f64, f64),
) -> Vec<VehicleState> {
    let mut out: Vec<VehicleState> = Vec::with_capacity(fleet.n);
    let mut i = 0;
    while out.len() < fleet.n {
        let cand = VehicleState::new(rng.gen_range(0.0..x_len), rng.gen_range(-y_half..y_half), 0.0, 0.0);
        let ok = out.iter().enumerate().all(|(j, o)| {
            crate::fleet::elliptic_distance((cand.x, cand.y), (o.x, o.y), fleet.p.get(i, j)) >= 1.2 * fleet.l.get(i, j)
        });
        if ok {
            out.push(cand);
            i += 1;
        }
    }
    for s in out.iter_mut() {
        s.theta = rng.gen_range(-0.5 * fleet.phi..0.5 * fleet.phi);
        s.v = rng.gen_range(speed.0..speed.1);
    }
    out
}

/// Quintic smoothstep from `a` to `b` over [x0, x1], sampled into clamped-spline knots.
pub fn smooth_transition(x0: f64, x1: f64, a: f64, b: f64, pad: f64, dx: f64) -> Result<HermiteCurve> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut x = x0 - pad;
    while x <= x1 + pad + 1e-9 {
        let u = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        xs.push(x);
        ys.push(a + (b - a) * s);
        x += dx;
    }
    HermiteCurve::clamped(&xs, &ys)
}

pub const BOTTLENECK_HALF_OPEN: f64 = 7.2;
pub const BOTTLENECK_HALF_NARROW: f64 = 2.0;
pub const BOTTLENECK_NARROW_START: f64 = 40.0;
pub const BOTTLENECK_NARROW_END: f64 = 80.0;

fn bottleneck(dy: f64, seed: u64) -> Result<Scenario> {
    let fleet = FleetConfig::uniform(2, 5.0, 35.0, 0.45, 1.0, 6.0, 100.0)?;
    let ctrl = gcc_ctrl(vec![30.0]);
    let beta = smooth_transition(
        BOTTLENECK_NARROW_START,
        BOTTLENECK_NARROW_END,
        BOTTLENECK_HALF_OPEN,
        BOTTLENECK_HALF_NARROW,
        20.0,
        1.0,
    )?;
    let alpha = HermiteCurve { xs: beta.xs.clone(), ys: beta.ys.iter().map(|v| -v).collect(), ms: beta.ms.iter().map(|v| -v).collect() };
    let c = Corridor::from_curves(alpha, beta)?;
    let road = RoadSpec::CorridorSet { corridors: vec![c.clone(), c] };
    let w0 = FleetState::new(0.0, vec![VehicleState::new(0.0, 5.0 + dy, 0.0, 30.0), VehicleState::new(0.0, -5.0, 0.0, 30.0)]);
    let icfg = IntegratorConfig { t_end: 60.0, sample_dt: 0.1, seed, tol_abs: 1e-7, tol_rel: 1e-7, ..Default::default() };
    Ok(Scenario { name: String::new(), w0, fleet, ctrl, road, icfg })
}

fn gcc_ctrl(v_star: Vec<f64>) -> ControllerConfig {
    ControllerConfig {
        family: Family::Gcc,
        v_star,
        gamma: 0.1,
        big_gamma: 1.0,
        b: 1.0,
        a_pen: 0.0,
        potential: VehiclePotential::rational_cubic(1e-4, 6.0, 100.0),
        boundary: BoundaryPotential::quartic(1.0, 2.1),
        kernel: None,
        ell: SaturationEll::hinge(0.2),
        g: MonotoneG::Identity,
        relax: RelaxationPair::default(),
        sigma: SigmaShaper::new(0.001, 1.0),
    }
}

pub const OFFRAMP_HALF_WIDTH: f64 = 7.2;
pub const OFFRAMP_LANE_WIDTH: f64 = 7.2;
pub const OFFRAMP_TRANSITION: f64 = 200.0;

/// Whether vehicle i of the off-ramp preset is bound to exit.
pub fn offramp_exits(i: usize) -> bool {
    i % 3 == 0
}

fn offramp(seed: u64) -> Result<Scenario> {
    let n = 150;
    let fleet = FleetConfig::uniform(n, 5.0, 35.0, 0.45, 4.25, 6.0, 100.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_len = 12.0 * n as f64;
    let a = OFFRAMP_HALF_WIDTH;
    let mut vehicles = random_fleet(&mut rng, &fleet, x_len, 0.6 * a, (15.0, 33.25));
    vehicles.iter_mut().for_each(|s| s.x -= x_len);
    let v_star: Vec<f64> = (0..n).map(|_| [28.0, 29.0, 30.0, 31.0][rng.gen_range(0..4)]).collect();
    let ctrl = gcc_ctrl(v_star);
    let x0 = 300.0;
    let x1 = x0 + OFFRAMP_TRANSITION;
    let main = Corridor::constant(-a, a)?;
    let exit_alpha = smooth_transition(x0, x1, -a, -a - OFFRAMP_LANE_WIDTH, 20.0, 4.0)?;
    let exit_beta = smooth_transition(x0, x1, a, -a, 20.0, 4.0)?;
    let exit = Corridor::from_curves(exit_alpha, exit_beta)?;
    let corridors = (0..n).map(|i| if offramp_exits(i) { exit.clone() } else { main.clone() }).collect();
    let icfg = IntegratorConfig {
        t_end: 120.0,
        sample_dt: 0.5,
        seed,
        tol_abs: 1e-3,
        tol_rel: 1e-4,
        h_max: 0.2,
        ..Default::default()
    };
    Ok(Scenario { name: String::new(), w0: FleetState::new(0.0, vehicles), fleet, ctrl, road: RoadSpec::CorridorSet { corridors }, icfg })
}

fn lane_free(family: Family, viscous: bool, seed: u64) -> Result<Scenario> {
    let n = 15;
    let fleet = FleetConfig::uniform(n, 5.0, 35.0, 0.25, 4.25, 5.59, 25.0)?;
    let ctrl = lane_free_ctrl(family, viscous);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vehicles = random_fleet(&mut rng, &fleet, 25.0 * n as f64, 0.5 * 7.2, (15.0, 33.25));
    let icfg = IntegratorConfig { t_end: 60.0, sample_dt: 0.1, seed, ..Default::default() };
    Ok(Scenario {
        name: String::new(),
        w0: FleetState::new(0.0, vehicles),
        fleet,
        ctrl,
        road: RoadSpec::ConstantWidth { a: 7.2 },
        icfg,
    })
}

pub fn preset_scenario(name: &str, seed: u64) -> Result<Scenario> {
    let mut sc = match name {
        "ncc-viscous" => lane_free(Family::Ncc, true, seed)?,
        "ncc-inviscid" => lane_free(Family::Ncc, false, seed)?,
        "prcc-viscous" => lane_free(Family::Prcc, true, seed)?,
        "prcc-inviscid" => lane_free(Family::Prcc, false, seed)?,
        "gcc-offramp" => offramp(seed)?,
        "gcc-bottleneck-symmetric" => bottleneck(0.0, seed)?,
        "gcc-bottleneck-perturbed" => bottleneck(0.5, seed)?,
        other => return Err(Error::InvalidConfig(format!("unknown preset '{other}'"))),
    };
    sc.name = name.to_string();
    sc.ctrl.validate(&sc.fleet)?;
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::validate_membership;
    use approx::assert_relative_eq;

    fn lane_cfg() -> LaneConfig {
        LaneConfig {
            v_star: 30.0,
            v_max: 35.0,
            gamma: 0.1,
            potential: VehiclePotential::rational_cubic(1e-4, 5.59, 25.0),
            ell: SaturationEll::hinge(0.2),
        }
    }

    #[test]
    fn oracle_examples() {
        let cfg = lane_cfg();
        let init = LaneState { s: vec![40.0], v: vec![30.0, 29.0] };
        let out = prop1_oracle(&init, &cfg, &[0.0, 1.0, 1e4]).unwrap();
        assert_eq!(out[0].1, init);
        assert_relative_eq!(out[1].1.v[1], 30.0 - (-0.2f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(out[1].1.v[1], 29.181269, max_relative = 1e-8);
        assert_relative_eq!(out[2].1.s[0], 45.0, max_relative = 1e-12);
        let same = LaneState { s: vec![30.0, 26.0], v: vec![28.0; 3] };
        let out = prop1_oracle(&same, &cfg, &[5.0]).unwrap();
        assert_eq!(out[0].1.s, same.s);
        let bad = LaneState { s: vec![26.0], v: vec![25.0, 31.0] };
        assert!(prop1_oracle(&bad, &cfg, &[1.0]).is_err());
    }

    #[test]
    fn lane_integration_matches_closed_form() {
        let cfg = lane_cfg();
        let init = LaneState { s: vec![40.0], v: vec![30.0, 29.0] };
        let icfg = IntegratorConfig { tol_abs: 1e-9, tol_rel: 1e-9, t_end: 1.0, sample_dt: 0.5, ..Default::default() };
        let sim = integrate_lane(&init, &cfg, &icfg).unwrap();
        let (t, st) = sim.last().unwrap();
        assert_relative_eq!(*t, 1.0, max_relative = 1e-12);
        assert!((st.v[1] - 29.181269246922018).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let sc = preset_scenario("ncc-viscous", 1).unwrap();
        let n = 1;
        let fleet = FleetConfig::uniform(n, 5.0, 35.0, 0.25, 4.25, 5.59, 25.0).unwrap();
        let w0 = FleetState::new(0.0, vec![VehicleState::new(0.0, 0.0, 0.0, 30.0)]);
        let icfg = IntegratorConfig { t_end: 5.0, ..Default::default() };
        let tr = integrate(&w0, &fleet, &sc.ctrl, &sc.road, &icfg).unwrap();
        let last = &tr.samples.last().unwrap().state.vehicles[0];
        assert_relative_eq!(last.x, 150.0, max_relative = 1e-12);
        assert_eq!((last.y, last.theta, last.v), (0.0, 0.0, 30.0));
    }

    #[test]
    fn presets_are_admissible() {
        for name in PRESETS {
            let sc = preset_scenario(name, 7).unwrap();
            assert!(validate_membership(&sc.w0, &sc.fleet, &sc.road).unwrap().is_empty(), "{name}");
            assert!(control(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road).is_ok(), "{name}");
        }
        assert!(preset_scenario("nope", 1).is_err());
    }

    #[test]
    fn preset_parameters() {
        let sc = preset_scenario("ncc-viscous", 1).unwrap();
        assert_eq!((sc.ctrl.gamma, sc.ctrl.big_gamma), (0.1, 0.5));
        assert_eq!(sc.ctrl.kernel, Some(ViscosityKernel::quadratic(0.03, 5.59, 25.0)));
        assert_eq!(sc.ctrl.g, MonotoneG::Identity);
        let sc = preset_scenario("prcc-viscous", 1).unwrap();
        assert_eq!(sc.ctrl.relax.f, Relaxation::Linear { k: 0.5 });
        assert_eq!(sc.ctrl.relax.fbar, Relaxation::Linear { k: 2.0 });
        assert_eq!((sc.ctrl.a_pen, sc.ctrl.b), (1.0, 1.0));
        assert_eq!(sc.ctrl.potential, VehiclePotential::rational_cubic(0.01, 5.59, 25.0));
        assert_eq!(sc.ctrl.kernel, Some(ViscosityKernel::quadratic(0.1, 5.59, 25.0)));
        let sc = preset_scenario("gcc-bottleneck-symmetric", 1).unwrap();
        assert_eq!(sc.w0.len(), 2);
        assert_eq!((sc.w0.vehicles[0].y, sc.w0.vehicles[1].y), (5.0, -5.0));
        assert_eq!((sc.fleet.p.get(0, 1), sc.fleet.l.get(0, 1)), (1.0, 6.0));
        if let RoadSpec::CorridorSet { corridors } = &sc.road {
            let (a, b) = corridors[0].bounds(100.0);
            assert_relative_eq!(b - a, 4.0, max_relative = 1e-12);
        }
        let sc = preset_scenario("gcc-offramp", 3).unwrap();
        assert_eq!(sc.w0.len(), 150);
        assert!(sc.ctrl.v_star.iter().all(|v| [28.0, 29.0, 30.0, 31.0].contains(v)));
        if let RoadSpec::CorridorSet { corridors } = &sc.road {
            let slope = corridors[0].max_slope();
            assert!(slope <= 0.9 * 0.45f64.tan(), "slope {slope}");
        }
    }

    #[test]
    fn reruns_are_bit_identical() {
        let mut sc = preset_scenario("ncc-viscous", 4).unwrap();
        sc.icfg.t_end = 2.0;
        let a = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg).unwrap();
        let b = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg).unwrap();
        assert_eq!(a, b);
    }
}
