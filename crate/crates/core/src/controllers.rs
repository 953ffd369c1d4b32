//! Lane-free cruise controllers (NCC, PRCC, GCC) and the lane-based NCC.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fleet::{corridor_geometry, Corridor, CorridorPoint, FleetConfig, FleetState, RoadSpec};
use crate::shapes::{
    BoundaryPotential, MonotoneG, RelaxationPair, SaturationEll, ScalarShape, SigmaShaper, VehiclePotential,
    ViscosityKernel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ncc,
    Prcc,
    Gcc,
    LaneNcc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub family: Family,
    /// One entry shared by all vehicles, or one per vehicle.
    pub v_star: Vec<f64>,
    pub gamma: f64,
    pub big_gamma: f64,
    /// Kinetic weight b (b̄ for GCC).
    pub b: f64,
    /// Orientation penalty weight A (NCC/PRCC).
    pub a_pen: f64,
    /// Pair potential; its blow-up and cutoff are replaced by the fleet's L_ij and λ.
    pub potential: VehiclePotential,
    /// For GCC the half-width is 1 (the argument is normalised to the corridor).
    pub boundary: BoundaryPotential,
    pub kernel: Option<ViscosityKernel>,
    pub ell: SaturationEll,
    pub g: MonotoneG,
    pub relax: RelaxationPair,
    pub sigma: SigmaShaper,
}

impl ControllerConfig {
    pub fn v_star_of(&self, i: usize) -> f64 {
        if self.v_star.len() == 1 {
            self.v_star[0]
        } else {
            self.v_star[i]
        }
    }

    pub fn max_v_star(&self) -> f64 {
        self.v_star.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cross-field admissibility: cos φ > v*/v_max (and > 1/3 for GCC).
    pub fn validate(&self, fleet: &FleetConfig) -> Result<()> {
        if self.v_star.is_empty() || (self.v_star.len() != 1 && self.v_star.len() != fleet.n) {
            return Err(Error::InvalidConfig("v_star must have one entry or one per vehicle".into()));
        }
        if self.v_star.iter().any(|&v| !(v > 0.0 && v < fleet.v_max)) {
            return Err(Error::InvalidConfig("desired speeds must lie in (0, v_max)".into()));
        }
        if self.gamma <= 0.0 || self.big_gamma <= 0.0 || self.b <= 0.0 {
            return Err(Error::InvalidConfig("gamma, Gamma and b must be positive".into()));
        }
        let c = fleet.phi.cos();
        let ratio = self.max_v_star() / fleet.v_max;
        match self.family {
            Family::Gcc => {
                if !(c > ratio.max(1.0 / 3.0)) {
                    return Err(Error::InvalidConfig(format!(
                        "cos(phi) = {c:.6} must exceed max(v*/v_max, 1/3) = {:.6}",
                        ratio.max(1.0 / 3.0)
                    )));
                }
            }
            _ => {
                if !(c > ratio) {
                    return Err(Error::InvalidConfig(format!(
                        "cos(phi) = {c:.6} must exceed v*/v_max = {ratio:.6}"
                    )));
                }
                if matches!(self.family, Family::Ncc | Family::Prcc) && self.a_pen <= 0.0 {
                    return Err(Error::InvalidConfig("A must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn pair_potential(&self, fleet: &FleetConfig, i: usize, j: usize) -> VehiclePotential {
        match self.potential {
            VehiclePotential::RationalCubic { z1, .. } => {
                VehiclePotential::RationalCubic { z1, l: fleet.l.get(i, j), lambda: fleet.lambda }
            }
        }
    }

    pub fn pair_kernel(&self, fleet: &FleetConfig, i: usize, j: usize) -> Option<ViscosityKernel> {
        self.kernel.map(|k| match k {
            ViscosityKernel::QuadraticCutoff { z2, .. } => {
                ViscosityKernel::QuadraticCutoff { z2, l: fleet.l.get(i, j), lambda: fleet.lambda }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlOutput {
    pub f: Vec<f64>,
    pub delta: Vec<f64>,
    pub breakdown: BTreeMap<String, Vec<f64>>,
}

impl ControlOutput {
    fn new(n: usize) -> Self {
        Self { f: vec![0.0; n], delta: vec![0.0; n], breakdown: BTreeMap::new() }
    }

    pub fn get(&self, name: &str) -> &[f64] {
        &self.breakdown[name]
    }
}

/// One interacting neighbour of vehicle i (d < λ), with dx = x_i − x_j, dy = y_i − y_j.
#[derive(Debug, Clone, Copy)]
pub struct Neighbor {
    pub j: usize,
    pub dx: f64,
    pub dy: f64,
    pub d: f64,
    pub p: f64,
}

const HASH_THRESHOLD: usize = 200;

/// Interacting pairs for every vehicle, j ascending. Errors if any pair is at or
/// inside its safety distance.
pub fn neighbors(state: &FleetState, fleet: &FleetConfig) -> Result<Vec<Vec<Neighbor>>> {
    let n = state.len();
    let lam = fleet.lambda;
    let mut out: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
    let visit = |i: usize, j: usize, out: &mut Vec<Vec<Neighbor>>| -> Result<()> {
        let a = &state.vehicles[i];
        let b = &state.vehicles[j];
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        let p = fleet.p.get(i, j);
        let d = (dx * dx + p * dy * dy).sqrt();
        if !(d > fleet.l.get(i, j)) {
            return Err(Error::Membership(format!("vehicles {i} and {j} at distance {d} <= L")));
        }
        if d < lam {
            out[i].push(Neighbor { j, dx, dy, d, p });
            out[j].push(Neighbor { j: i, dx: -dx, dy: -dy, d, p });
        }
        Ok(())
    };
    if n <= HASH_THRESHOLD {
        for i in 0..n {
            for j in i + 1..n {
                visit(i, j, &mut out)?;
            }
        }
    } else {
        // Cells of width λ along x; |dx| ≤ d, so only adjacent cells can interact.
        // Pairs closer than L but further apart in x than one cell cannot exist since L < λ.
        let mut cells: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, s) in state.vehicles.iter().enumerate() {
            cells.entry((s.x / lam).floor() as i64).or_default().push(i);
        }
        for i in 0..n {
            let c = (state.vehicles[i].x / lam).floor() as i64;
            for cc in c - 1..=c + 1 {
                if let Some(members) = cells.get(&cc) {
                    for &j in members {
                        if j > i {
                            visit(i, j, &mut out)?;
                        }
                    }
                }
            }
        }
    }
    for list in out.iter_mut() {
        list.sort_by_key(|nb| nb.j);
    }
    Ok(out)
}

fn check_vehicle(state: &FleetState, fleet: &FleetConfig) -> Result<()> {
    if state.len() != fleet.n {
        return Err(Error::DimensionMismatch { expected: fleet.n, got: state.len() });
    }
    for (i, s) in state.vehicles.iter().enumerate() {
        if !(s.v > 0.0 && s.v < fleet.v_max) {
            return Err(Error::Membership(format!("vehicle {i} speed {} outside (0, v_max)", s.v)));
        }
        if !(s.theta.abs() < fleet.phi) {
            return Err(Error::Membership(format!("vehicle {i} orientation {} outside (-phi, phi)", s.theta)));
        }
    }
    Ok(())
}

fn lateral_force(ctrl: &ControllerConfig, y: f64, i: usize) -> Result<f64> {
    ctrl.boundary
        .eval(y)
        .map(|(_, d)| d)
        .map_err(|_| Error::Membership(format!("vehicle {i} lateral position {y} outside the road")))
}

struct PairSums {
    phi: f64,
    xi: f64,
    visc_cos: f64,
    visc_sin: f64,
}

fn pair_sums(
    state: &FleetState,
    fleet: &FleetConfig,
    ctrl: &ControllerConfig,
    i: usize,
    nbs: &[Neighbor],
) -> Result<PairSums> {
    let si = &state.vehicles[i];
    let gi_c = ctrl.g.g(si.v * si.theta.cos());
    let gi_s = ctrl.g.g(si.v * si.theta.sin());
    let mut s = PairSums { phi: 0.0, xi: 0.0, visc_cos: 0.0, visc_sin: 0.0 };
    for nb in nbs {
        let (_, dv) = ctrl.pair_potential(fleet, i, nb.j).eval(nb.d)?;
        s.phi += dv * nb.dx / nb.d;
        s.xi += nb.p * dv * nb.dy / nb.d;
        if let Some(k) = ctrl.pair_kernel(fleet, i, nb.j) {
            let kap = k.value(nb.d)?;
            let sj = &state.vehicles[nb.j];
            s.visc_cos += kap * (ctrl.g.g(sj.v * sj.theta.cos()) - gi_c);
            s.visc_sin += kap * (ctrl.g.g(sj.v * sj.theta.sin()) - gi_s);
        }
    }
    Ok(s)
}

/// Newtonian cruise controller. F is computed first, then δ with F substituted.
pub fn ncc_control(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig, road: &RoadSpec) -> Result<ControlOutput> {
    if !matches!(road, RoadSpec::ConstantWidth { .. }) {
        return Err(Error::InvalidConfig("NCC requires a constant-width road".into()));
    }
    check_vehicle(state, fleet)?;
    let nbs = neighbors(state, fleet)?;
    let n = state.len();
    let cphi = fleet.phi.cos();
    let mut out = ControlOutput::new(n);
    let (mut ks, mut zs, mut lams, mut xis) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let s = &state.vehicles[i];
        let vs = ctrl.v_star_of(i);
        let (c, sn) = (s.theta.cos(), s.theta.sin());
        let ps = pair_sums(state, fleet, ctrl, i, &nbs[i])?;
        let lam = ps.phi - ps.visc_cos;
        let z = -ctrl.big_gamma * s.v * sn + ps.visc_sin;
        let k = ctrl.gamma + lam / vs + fleet.v_max * c / (vs * (fleet.v_max * c - vs)) * ctrl.ell.ell(-lam);
        let f = -(k * (s.v * c - vs) + lam) / c;
        let den = vs + ctrl.a_pen / (s.v * (c - cphi).powi(2)) + s.v * c * (ctrl.b - 1.0);
        if !(den > 0.0) {
            return Err(Error::InvalidConfig(format!("steering denominator {den} <= 0 for vehicle {i}")));
        }
        let du = lateral_force(ctrl, s.y, i)?;
        let tan_d = fleet.lengths[i] / s.v * (z - du - ps.xi - ctrl.b * sn * f) / den;
        out.f[i] = f;
        out.delta[i] = tan_d.atan();
        ks[i] = k;
        zs[i] = z;
        lams[i] = lam;
        xis[i] = ps.xi;
    }
    out.breakdown.insert("k".into(), ks);
    out.breakdown.insert("Z".into(), zs);
    out.breakdown.insert("Lambda".into(), lams);
    out.breakdown.insert("Xi".into(), xis);
    Ok(out)
}

/// q(v, θ) of the pseudo-relativistic controller.
pub fn prcc_q(v: f64, theta: f64, v_star: f64, v_max: f64) -> f64 {
    v_max * v_max * (v_max * v * theta.cos() + v_star * v_max - 2.0 * v_star * v)
        / (2.0 * (v_max - v).powi(2) * v * v)
}

/// Pseudo-relativistic cruise controller. F first, then δ.
pub fn prcc_control(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig, road: &RoadSpec) -> Result<ControlOutput> {
    if !matches!(road, RoadSpec::ConstantWidth { .. }) {
        return Err(Error::InvalidConfig("PRCC requires a constant-width road".into()));
    }
    check_vehicle(state, fleet)?;
    let nbs = neighbors(state, fleet)?;
    let n = state.len();
    let vm = fleet.v_max;
    let cphi = fleet.phi.cos();
    let mut out = ControlOutput::new(n);
    let mut cols: [Vec<f64>; 6] = Default::default();
    for c in cols.iter_mut() {
        *c = vec![0.0; n];
    }
    for i in 0..n {
        let s = &state.vehicles[i];
        let vs = ctrl.v_star_of(i);
        let (c, sn) = (s.theta.cos(), s.theta.sin());
        let ps = pair_sums(state, fleet, ctrl, i, &nbs[i])?;
        let g = -ctrl.relax.fbar.apply(s.v * sn) + ps.visc_sin;
        let r = -ctrl.relax.f.apply(s.v * c - vs) + ps.visc_cos;
        let q = prcc_q(s.v, s.theta, vs, vm);
        let beta = ctrl.a_pen / (c - cphi).powi(2) + vm * vm * ((ctrl.b - 1.0) * s.v * c + vs) / (vm - s.v);
        if !(beta > 0.0) {
            return Err(Error::InvalidConfig(format!("beta {beta} <= 0 for vehicle {i}")));
        }
        let a_t = ctrl.b * vm.powi(3) * sn / (2.0 * (vm - s.v).powi(2) * s.v);
        let f = (r - ps.phi) / q;
        let du = lateral_force(ctrl, s.y, i)?;
        let tan_d = fleet.lengths[i] / beta * (g - du - a_t * f - ps.xi);
        out.f[i] = f;
        out.delta[i] = tan_d.atan();
        for (col, val) in cols.iter_mut().zip([g, r, q, beta, a_t, ps.xi]) {
            col[i] = val;
        }
    }
    for (name, col) in ["G", "R", "q", "beta", "a_tilde", "Xi"].iter().zip(cols) {
        out.breakdown.insert((*name).into(), col);
    }
    Ok(out)
}

/// q̄(v, θ, ζ) of the generalized controller.
pub fn gcc_qbar(v: f64, theta: f64, zeta: f64, v_max: f64) -> f64 {
    v_max * v_max * (v_max * v * theta.cos() + zeta * v_max - 2.0 * zeta * v) / (2.0 * (v_max - v).powi(2) * v * v)
}

/// Corridor quantities for vehicle i: geometry, g_i, and ξ_i with ġ_i = v_i ξ_i.
pub struct CorridorTerms {
    pub pt: CorridorPoint,
    pub xi: f64,
    /// ∂g/∂x and ∂g/∂y.
    pub gx: f64,
    pub gy: f64,
}

pub fn corridor_terms(c: &Corridor, x: f64, y: f64, theta: f64, i: usize) -> Result<CorridorTerms> {
    let pt = corridor_geometry(c, x, y).map_err(|_| Error::CorridorExit { vehicle: i, x })?;
    let w = pt.beta - pt.alpha;
    let frac = (y - pt.alpha) / w;
    let gy = (pt.d_beta - pt.d_alpha) / w;
    let gx = frac * pt.dd_beta + (1.0 - frac) * pt.dd_alpha - pt.g * gy;
    let (c_, s_) = (theta.cos(), theta.sin());
    let xi = c_ * (frac * pt.dd_beta + (1.0 - frac) * pt.dd_alpha) + (s_ - pt.g * c_) * gy;
    Ok(CorridorTerms { pt, xi, gx, gy })
}

struct GccPair {
    phi: f64,
    xi: f64,
    dphi: f64,
    dxi: f64,
}

/// Φ_i, Ξ_i and their time derivatives along the current kinematics.
fn gcc_pair_terms(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig, i: usize, nbs: &[Neighbor]) -> Result<GccPair> {
    let si = &state.vehicles[i];
    let (xdi, ydi) = (si.v * si.theta.cos(), si.v * si.theta.sin());
    let mut t = GccPair { phi: 0.0, xi: 0.0, dphi: 0.0, dxi: 0.0 };
    for nb in nbs {
        let sj = &state.vehicles[nb.j];
        let ux = xdi - sj.v * sj.theta.cos();
        let uy = ydi - sj.v * sj.theta.sin();
        let (_, d1, d2) = ctrl.pair_potential(fleet, i, nb.j).eval2(nb.d)?;
        let dd = (nb.dx * ux + nb.p * nb.dy * uy) / nb.d;
        let a = d1 / nb.d;
        let da = (d2 / nb.d - d1 / (nb.d * nb.d)) * dd;
        t.phi += a * nb.dx;
        t.xi += nb.p * a * nb.dy;
        t.dphi += da * nb.dx + a * ux;
        t.dxi += nb.p * (da * nb.dy + a * uy);
    }
    Ok(t)
}

/// Generalized cruise controller on per-vehicle corridors. δ is computed first,
/// then F with tan δ substituted.
pub fn gcc_control(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig, road: &RoadSpec) -> Result<ControlOutput> {
    let corridors = match road {
        RoadSpec::CorridorSet { corridors } => corridors,
        _ => return Err(Error::InvalidConfig("GCC requires a corridor set".into())),
    };
    if corridors.len() != state.len() {
        return Err(Error::DimensionMismatch { expected: state.len(), got: corridors.len() });
    }
    check_vehicle(state, fleet)?;
    let nbs = neighbors(state, fleet)?;
    let n = state.len();
    let vm = fleet.v_max;
    let cphi = fleet.phi.cos();
    let bb = ctrl.b;
    let mut out = ControlOutput::new(n);
    let names = ["zeta", "Phi", "Xi", "g", "qbar", "h", "xi", "Z_tilde"];
    let mut cols: Vec<Vec<f64>> = vec![vec![0.0; n]; names.len()];
    for i in 0..n {
        let s = &state.vehicles[i];
        let vs = ctrl.v_star_of(i);
        let (c, sn) = (s.theta.cos(), s.theta.sin());
        let ct = corridor_terms(&corridors[i], s.x, s.y, s.theta, i)?;
        let pt = ct.pt;
        let g = pt.g;
        let width = pt.beta - pt.alpha;
        let pr = gcc_pair_terms(state, fleet, ctrl, i, &nbs[i])?;
        let arg = pr.phi + g * pr.xi;
        let (sig, dsig) = ctrl.sigma.eval_pair(arg);
        let zeta = vs * sig;
        let gdot = s.v * ct.xi;
        let darg = pr.dphi + gdot * pr.xi + g * pr.dxi;
        let z_t = vs * dsig * darg;
        let dc = c - cphi;
        let h = 2.0 * c * dc + sn * sn + sn * g * (c - 2.0 * cphi);
        if !(h > 0.0) {
            return Err(Error::InvalidConfig(format!("h = {h} <= 0 for vehicle {i}")));
        }
        let eta = (2.0 * s.y - (pt.beta + pt.alpha)) / width;
        let du = ctrl
            .boundary
            .eval(eta)
            .map_err(|_| Error::CorridorExit { vehicle: i, x: s.x })?
            .1;
        let e = sn - g * c;
        let bracket = -ctrl.big_gamma * s.v * s.v * e
            + s.v * (bb * vm * vm * c * ct.xi / dc - 2.0 * du / width - pr.xi);
        let tan_d = 2.0 * fleet.lengths[i] * dc * dc / (bb * vm * vm * s.v * h) * bracket;
        let qbar = gcc_qbar(s.v, s.theta, zeta, vm);
        let f = -(ctrl.gamma * (s.v * c - zeta) + arg) / qbar
            + vm * vm * (z_t + s.v * s.v * sn * tan_d / fleet.lengths[i]) / (qbar * s.v * (vm - s.v));
        out.f[i] = f;
        out.delta[i] = tan_d.atan();
        for (col, val) in cols.iter_mut().zip([zeta, pr.phi, pr.xi, g, qbar, h, ct.xi, z_t]) {
            col[i] = val;
        }
    }
    for (name, col) in names.iter().zip(cols) {
        out.breakdown.insert((*name).into(), col);
    }
    Ok(out)
}

pub fn control(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig, road: &RoadSpec) -> Result<ControlOutput> {
    match ctrl.family {
        Family::Ncc => ncc_control(state, fleet, ctrl, road),
        Family::Prcc => prcc_control(state, fleet, ctrl, road),
        Family::Gcc => gcc_control(state, fleet, ctrl, road),
        Family::LaneNcc => Err(Error::InvalidConfig("lane-based NCC acts on spacings, use lane_ncc_rhs".into())),
    }
}

/// Closed-loop vector field of the bicycle model: (ẋ, ẏ, θ̇, v̇) per vehicle.
pub fn closed_loop_rhs(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig, road: &RoadSpec) -> Result<(Vec<f64>, ControlOutput)> {
    let out = control(state, fleet, ctrl, road)?;
    let mut rhs = Vec::with_capacity(4 * state.len());
    for (i, s) in state.vehicles.iter().enumerate() {
        rhs.push(s.v * s.theta.cos());
        rhs.push(s.v * s.theta.sin());
        rhs.push(s.v * out.delta[i].tan() / fleet.lengths[i]);
        rhs.push(out.f[i]);
    }
    Ok((rhs, out))
}

/// Lane-based state: spacings s_2..s_n (index 0 holds s_2) and speeds v_1..v_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneState {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
}

impl LaneState {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut w = self.s.clone();
        w.extend_from_slice(&self.v);
        w
    }

    pub fn from_slice(n: usize, w: &[f64]) -> Self {
        Self { s: w[..n - 1].to_vec(), v: w[n - 1..].to_vec() }
    }
}

/// Lane-based configuration: one-dimensional potential V(s), speed limit, gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneConfig {
    pub v_star: f64,
    pub v_max: f64,
    pub gamma: f64,
    pub potential: VehiclePotential,
    pub ell: SaturationEll,
}

impl LaneConfig {
    /// ω̄ = γ + ℓ(0).
    pub fn omega_bar(&self) -> f64 {
        self.gamma + self.ell.ell(0.0)
    }
}

pub fn lane_ncc_rhs(state: &LaneState, cfg: &LaneConfig) -> Result<LaneState> {
    let n = state.v.len();
    if n == 0 || state.s.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n.saturating_sub(1), got: state.s.len() });
    }
    let l = cfg.potential.blow_up();
    for (k, &s) in state.s.iter().enumerate() {
        if !(s > l) {
            return Err(Error::Membership(format!("spacing s_{} = {s} <= L", k + 2)));
        }
    }
    for (i, &v) in state.v.iter().enumerate() {
        if !(v >= 0.0 && v <= cfg.v_max) {
            return Err(Error::Membership(format!("speed v_{} = {v} outside [0, v_max]", i + 1)));
        }
    }
    // dv[k] = V'(s_{k+2})
    let dv: Vec<f64> = state.s.iter().map(|&s| cfg.potential.eval(s).map(|p| p.1)).collect::<Result<_>>()?;
    let mut ds = vec![0.0; n - 1];
    for k in 0..n - 1 {
        ds[k] = state.v[k] - state.v[k + 1];
    }
    let mut dvel = vec![0.0; n];
    for i in 0..n {
        let front = if i > 0 { dv[i - 1] } else { 0.0 };
        let back = if i + 1 < n { dv[i] } else { 0.0 };
        let force = front - back;
        let k = cfg.gamma + cfg.ell.ell(force);
        dvel[i] = -k * (state.v[i] - cfg.v_star) + force;
    }
    Ok(LaneState { s: ds, v: dvel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::VehicleState;
    use approx::assert_relative_eq;

    pub(crate) fn ncc41(n: usize) -> (FleetConfig, ControllerConfig) {
        let fleet = FleetConfig::uniform(n, 5.0, 35.0, 0.25, 4.25, 5.59, 25.0).unwrap();
        let ctrl = ControllerConfig {
            family: Family::Ncc,
            v_star: vec![30.0],
            gamma: 0.1,
            big_gamma: 0.5,
            b: 1.0,
            a_pen: 1.0,
            potential: VehiclePotential::rational_cubic(1e-4, 5.59, 25.0),
            boundary: BoundaryPotential::quartic(7.2, 1.5),
            kernel: Some(ViscosityKernel::quadratic(0.03, 5.59, 25.0)),
            ell: SaturationEll::hinge(0.2),
            g: MonotoneG::Identity,
            relax: RelaxationPair::default(),
            sigma: SigmaShaper::new(0.001, 1.0),
        };
        (fleet, ctrl)
    }

    fn road() -> RoadSpec {
        RoadSpec::ConstantWidth { a: 7.2 }
    }

    fn one(v: f64) -> FleetState {
        FleetState::new(0.0, vec![VehicleState::new(0.0, 0.0, 0.0, v)])
    }

    #[test]
    fn ncc_equilibrium_is_zero() {
        let (f, c) = ncc41(1);
        let o = ncc_control(&one(30.0), &f, &c, &road()).unwrap();
        assert_eq!(o.f[0], 0.0);
        assert_eq!(o.delta[0], 0.0);
    }

    #[test]
    fn ncc_single_vehicle_below_target() {
        let (f, c) = ncc41(1);
        let o = ncc_control(&one(29.0), &f, &c, &road()).unwrap();
        let k = 0.1 + 35.0 / (30.0 * 5.0) * 0.1;
        assert_relative_eq!(o.f[0], k * 1.0, max_relative = 1e-14);
        assert_relative_eq!(o.f[0], 0.1233333333, max_relative = 1e-9);
        assert_eq!(o.delta[0], 0.0);
    }

    #[test]
    fn prcc_single_vehicle() {
        let (f, mut c) = ncc41(1);
        c.family = Family::Prcc;
        let o = prcc_control(&one(30.0), &f, &c, &road()).unwrap();
        assert_eq!((o.f[0], o.delta[0]), (0.0, 0.0));
        let o = prcc_control(&one(29.0), &f, &c, &road()).unwrap();
        let q = 1225.0 * 325.0 / (2.0 * 36.0 * 841.0);
        assert_relative_eq!(o.f[0], 0.5 / q, max_relative = 1e-13);
        assert_relative_eq!(o.f[0], 0.076047, max_relative = 1e-5);
        assert_relative_eq!(prcc_q(30.0, 0.0, 30.0, 35.0), 35.0 * 35.0 / (5.0 * 30.0), max_relative = 1e-14);
        assert_relative_eq!(prcc_q(30.0, 0.0, 30.0, 35.0), 8.16667, max_relative = 1e-5);
    }

    #[test]
    fn omega_bar_value() {
        let cfg = LaneConfig {
            v_star: 30.0,
            v_max: 35.0,
            gamma: 0.1,
            potential: VehiclePotential::rational_cubic(1e-4, 5.59, 25.0),
            ell: SaturationEll::hinge(0.2),
        };
        assert_relative_eq!(cfg.omega_bar(), 0.2, max_relative = 1e-15);
        let st = LaneState { s: vec![40.0], v: vec![30.0, 29.0] };
        let d = lane_ncc_rhs(&st, &cfg).unwrap();
        assert_eq!(d.s[0], 1.0);
        assert_relative_eq!(d.v[1], -0.2 * (29.0 - 30.0), max_relative = 1e-15);
        assert_eq!(d.v[0], 0.0);
        let eq = LaneState { s: vec![30.0, 25.0], v: vec![30.0; 3] };
        let d = lane_ncc_rhs(&eq, &cfg).unwrap();
        assert!(d.s.iter().chain(d.v.iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn config_rejects_unreachable_target() {
        let (f, mut c) = ncc41(1);
        c.v_star = vec![35.0];
        assert!(c.validate(&f).is_err());
        c.v_star = vec![34.0];
        assert!(c.validate(&f).is_err());
        c.v_star = vec![30.0];
        assert!(c.validate(&f).is_ok());
    }

    #[test]
    fn collision_is_rejected() {
        let (f, c) = ncc41(2);
        let s = FleetState::new(0.0, vec![VehicleState::new(0.0, 0.0, 0.0, 30.0), VehicleState::new(5.0, 0.0, 0.0, 30.0)]);
        assert!(matches!(ncc_control(&s, &f, &c, &road()), Err(Error::Membership(_))));
    }

    #[test]
    fn hashed_neighbors_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 260;
        let fleet = FleetConfig::uniform(n, 5.0, 35.0, 0.25, 4.25, 5.59, 25.0).unwrap();
        let vehicles: Vec<VehicleState> =
            (0..n).map(|i| VehicleState::new(i as f64 * 8.0, rng.gen_range(-3.0..3.0), 0.0, 30.0)).collect();
        let st = FleetState::new(0.0, vehicles);
        let hashed = neighbors(&st, &fleet).unwrap();
        for i in 0..n {
            let mut brute = Vec::new();
            for j in 0..n {
                if j != i {
                    let d = crate::fleet::elliptic_distance(
                        (st.vehicles[i].x, st.vehicles[i].y),
                        (st.vehicles[j].x, st.vehicles[j].y),
                        4.25,
                    );
                    if d < 25.0 {
                        brute.push(j);
                    }
                }
            }
            let got: Vec<usize> = hashed[i].iter().map(|nb| nb.j).collect();
            assert_eq!(got, brute);
        }
    }
}
