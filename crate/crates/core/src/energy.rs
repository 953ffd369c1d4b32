//! Lyapunov and energy functions used as run diagnostics.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::controllers::{corridor_terms, neighbors, ControllerConfig, LaneConfig, LaneState};
use crate::error::{Error, Result};
use crate::fleet::{FleetConfig, FleetState, RoadSpec};
use crate::shapes::ScalarShape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    pub parts: BTreeMap<String, f64>,
}

impl EnergyReport {
    fn from_parts(parts: &[(&str, f64)]) -> Self {
        let value = parts.iter().map(|p| p.1).sum();
        Self { value, parts: parts.iter().map(|(k, v)| ((*k).to_string(), *v)).collect() }
    }

    pub fn part(&self, name: &str) -> f64 {
        self.parts[name]
    }
}

fn check_speeds(state: &FleetState, fleet: &FleetConfig) -> Result<()> {
    if state.len() != fleet.n {
        return Err(Error::DimensionMismatch { expected: fleet.n, got: state.len() });
    }
    for (i, s) in state.vehicles.iter().enumerate() {
        if !(s.v > 0.0 && s.v < fleet.v_max && s.theta.abs() < fleet.phi) {
            return Err(Error::Membership(format!("vehicle {i} outside speed/orientation bounds")));
        }
    }
    Ok(())
}

/// Σ_{i<j} V_ij(d_ij), which equals ½ΣΣ_{j≠i}.
fn pair_energy(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig) -> Result<f64> {
    let nbs = neighbors(state, fleet)?;
    let mut e = 0.0;
    for (i, list) in nbs.iter().enumerate() {
        for nb in list.iter().filter(|nb| nb.j > i) {
            e += ctrl.pair_potential(fleet, i, nb.j).value(nb.d)?;
        }
    }
    Ok(e)
}

fn boundary_energy(state: &FleetState, ctrl: &ControllerConfig) -> Result<f64> {
    let mut e = 0.0;
    for s in &state.vehicles {
        e += ctrl.boundary.value(s.y).map_err(|_| Error::Membership(format!("lateral position {} outside road", s.y)))?;
    }
    Ok(e)
}

fn orientation_energy(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig) -> f64 {
    let cphi = fleet.phi.cos();
    state
        .vehicles
        .iter()
        .map(|s| ctrl.a_pen * (1.0 / (s.theta.cos() - cphi) - 1.0 / (1.0 - cphi)))
        .sum()
}

/// Energy for the Newtonian controller.
pub fn eval_h(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig) -> Result<EnergyReport> {
    check_speeds(state, fleet)?;
    let mut kin = 0.0;
    for (i, s) in state.vehicles.iter().enumerate() {
        let (c, sn) = (s.theta.cos(), s.theta.sin());
        let dv = s.v * c - ctrl.v_star_of(i);
        kin += 0.5 * dv * dv + 0.5 * ctrl.b * s.v * s.v * sn * sn;
    }
    Ok(EnergyReport::from_parts(&[
        ("kinetic", kin),
        ("boundary", boundary_energy(state, ctrl)?),
        ("pairwise", pair_energy(state, fleet, ctrl)?),
        ("orientation", orientation_energy(state, fleet, ctrl)),
    ]))
}

/// Energy for the pseudo-relativistic controller.
pub fn eval_hr(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig) -> Result<EnergyReport> {
    check_speeds(state, fleet)?;
    let vm = fleet.v_max;
    let mut kin = 0.0;
    for (i, s) in state.vehicles.iter().enumerate() {
        let (c, sn) = (s.theta.cos(), s.theta.sin());
        let dv = s.v * c - ctrl.v_star_of(i);
        kin += 0.5 * vm * vm * (dv * dv + ctrl.b * s.v * s.v * sn * sn) / ((vm - s.v) * s.v);
    }
    Ok(EnergyReport::from_parts(&[
        ("kinetic", kin),
        ("boundary", boundary_energy(state, ctrl)?),
        ("pairwise", pair_energy(state, fleet, ctrl)?),
        ("orientation", orientation_energy(state, fleet, ctrl)),
    ]))
}

/// Normalised lateral coordinate (2y − (β+α))/(β−α): 0 at the centre, ±1 on the boundaries.
pub fn normalized_lateral(y: f64, alpha: f64, beta: f64) -> f64 {
    (2.0 * y - (beta + alpha)) / (beta - alpha)
}

/// Lyapunov-like function of the generalized controller.
pub fn eval_hbar(state: &FleetState, fleet: &FleetConfig, ctrl: &ControllerConfig, road: &RoadSpec) -> Result<EnergyReport> {
    let corridors = match road {
        RoadSpec::CorridorSet { corridors } => corridors,
        _ => return Err(Error::InvalidConfig("the corridor energy requires a corridor set".into())),
    };
    check_speeds(state, fleet)?;
    let nbs = neighbors(state, fleet)?;
    let vm = fleet.v_max;
    let cphi = fleet.phi.cos();
    let (mut kin, mut ori, mut bnd) = (0.0, 0.0, 0.0);
    for (i, s) in state.vehicles.iter().enumerate() {
        let ct = corridor_terms(&corridors[i], s.x, s.y, s.theta, i)?;
        let (mut phi, mut xi) = (0.0, 0.0);
        for nb in &nbs[i] {
            let d1 = ctrl.pair_potential(fleet, i, nb.j).eval(nb.d)?.1;
            phi += d1 * nb.dx / nb.d;
            xi += nb.p * d1 * nb.dy / nb.d;
        }
        let zeta = ctrl.v_star_of(i) * ctrl.sigma.eval_pair(phi + ct.pt.g * xi).0;
        let (c, sn) = (s.theta.cos(), s.theta.sin());
        let dv = s.v * c - zeta;
        kin += 0.5 * vm * vm * dv * dv / ((vm - s.v) * s.v);
        let e = sn - ct.pt.g * c;
        ori += 0.5 * ctrl.b * vm * vm * e * e / (c - cphi);
        let eta = normalized_lateral(s.y, ct.pt.alpha, ct.pt.beta);
        bnd += ctrl.boundary.value(eta).map_err(|_| Error::CorridorExit { vehicle: i, x: s.x })?;
    }
    Ok(EnergyReport::from_parts(&[
        ("kinetic", kin),
        ("orientation", ori),
        ("boundary", bnd),
        ("pairwise", pair_energy(state, fleet, ctrl)?),
    ]))
}

/// Lane-based energy ½Σ(v−v*)² + ΣV(s_i).
pub fn eval_htilde(state: &LaneState, cfg: &LaneConfig) -> Result<EnergyReport> {
    let kin: f64 = state.v.iter().map(|v| 0.5 * (v - cfg.v_star).powi(2)).sum();
    let mut pot = 0.0;
    for &s in &state.s {
        pot += cfg.potential.value(s).map_err(|_| Error::Membership(format!("spacing {s} <= L")))?;
    }
    Ok(EnergyReport::from_parts(&[("kinetic", kin), ("pairwise", pot)]))
}

/// Distance-like residual to the lane equilibrium set: zero iff every speed is v*
/// and every spacing is at least λ.
pub fn equilibrium_residual(state: &LaneState, cfg: &LaneConfig) -> f64 {
    let lam = cfg.potential.cutoff();
    let sv = state.v.iter().map(|v| (v - cfg.v_star).abs()).fold(0.0, f64::max);
    let ss = state.s.iter().map(|s| (lam - s).max(0.0)).fold(0.0, f64::max);
    sv.max(ss)
}
