//! Vehicle states, the elliptic distance, membership in the admissible set and
//! corridor geometry.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64) -> Self {
        Self { x, y, theta, v }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetState {
    pub t: f64,
    pub vehicles: Vec<VehicleState>,
}

impl FleetState {
    pub fn new(t: f64, vehicles: Vec<VehicleState>) -> Self {
        Self { t, vehicles }
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    /// Flattens to `[x0, y0, theta0, v0, x1, ...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.len());
        for s in &self.vehicles {
            out.extend_from_slice(&[s.x, s.y, s.theta, s.v]);
        }
        out
    }

    pub fn from_slice(t: f64, w: &[f64]) -> Self {
        let vehicles = w
            .chunks_exact(4)
            .map(|c| VehicleState::new(c[0], c[1], c[2], c[3]))
            .collect();
        Self { t, vehicles }
    }
}

/// Symmetric n×n table stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub n: usize,
    pub data: Vec<f64>,
}

impl PairTable {
    pub fn constant(n: usize, value: f64) -> Self {
        Self { n, data: vec![value; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn max_offdiag(&self) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m = m.max(self.get(i, j));
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetConfig {
    pub n: usize,
    pub lengths: Vec<f64>,
    pub v_max: f64,
    pub phi: f64,
    pub p: PairTable,
    pub l: PairTable,
    pub lambda: f64,
}

impl FleetConfig {
    /// Uniform fleet: scalar eccentricity and safety distance expanded to
    /// constant tables.
    pub fn uniform(n: usize, length: f64, v_max: f64, phi: f64, p: f64, l: f64, lambda: f64) -> Result<Self> {
        let cfg = Self {
            n,
            lengths: vec![length; n],
            v_max,
            phi,
            p: PairTable::constant(n, p),
            l: PairTable::constant(n, l),
            lambda,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: self.lengths.len() });
        }
        if self.p.n != self.n || self.l.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: self.p.n.min(self.l.n) });
        }
        if !(self.phi > 0.0 && self.phi < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidConfig(format!("phi = {} must lie in (0, pi/2)", self.phi)));
        }
        if self.v_max <= 0.0 {
            return Err(Error::InvalidConfig("v_max must be positive".into()));
        }
        if !self.p.is_symmetric() || !self.l.is_symmetric() {
            return Err(Error::InvalidConfig("p and L tables must be symmetric".into()));
        }
        if self.p.data.iter().any(|&x| x <= 0.0) || self.l.data.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidConfig("p and L entries must be positive".into()));
        }
        if self.n > 1 && self.lambda <= self.l.max_offdiag() {
            return Err(Error::InvalidConfig(format!(
                "interaction radius {} must exceed every safety distance",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// sqrt(dx² + p·dy²).
#[inline]
pub fn elliptic_distance(pi: (f64, f64), pj: (f64, f64), p: f64) -> f64 {
    let dx = pi.0 - pj.0;
    let dy = pi.1 - pj.1;
    (dx * dx + p * dy * dy).sqrt()
}

/// Clamped cubic spline stored as Hermite segments (knot values and slopes).
/// Slopes solve the C² continuity system with zero end slopes; outside the
/// knot range the function is held constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteCurve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub ms: Vec<f64>,
}

impl HermiteCurve {
    pub fn constant(value: f64) -> Self {
        Self { xs: vec![0.0, 1.0], ys: vec![value, value], ms: vec![0.0, 0.0] }
    }

    pub fn clamped(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidConfig("curve needs at least two knots with matching values".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("knot abscissae must be strictly increasing".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut ms = vec![0.0; n];
        if n > 2 {
            // Interior slopes m_1..m_{n-2}; C² matching at each interior knot:
            // h_k m_{k-1} + 2(h_{k-1}+h_k) m_k + h_{k-1} m_{k+1} = 3(h_k δ_{k-1} + h_{k-1} δ_k)
            let m = n - 2;
            let mut a = vec![0.0; m];
            let mut b = vec![0.0; m];
            let mut c = vec![0.0; m];
            let mut d = vec![0.0; m];
            for r in 0..m {
                let k = r + 1;
                a[r] = h[k];
                b[r] = 2.0 * (h[k - 1] + h[k]);
                c[r] = h[k - 1];
                d[r] = 3.0 * (h[k] * delta[k - 1] + h[k - 1] * delta[k]);
            }
            let sol = solve_tridiagonal(&a, &b, &c, &d);
            ms[1..(m + 1)].copy_from_slice(&sol);
        }
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), ms })
    }

    /// Value, first and second derivative at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return (self.ys[0], 0.0, 0.0);
        }
        if x >= self.xs[n - 1] {
            return (self.ys[n - 1], 0.0, 0.0);
        }
        let k = match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(k) => k.min(n - 2),
            Err(k) => k - 1,
        };
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (y0, y1, m0, m1) = (self.ys[k], self.ys[k + 1], self.ms[k], self.ms[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let val = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        let der = (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1;
        let s00 = 12.0 * t - 6.0;
        let s10 = 6.0 * t - 4.0;
        let s01 = -12.0 * t + 6.0;
        let s11 = 6.0 * t - 2.0;
        let sec = (s00 * y0 + s01 * y1) / (h * h) + (s10 * m0 + s11 * m1) / h;
        (val, der, sec)
    }

    /// Largest jump of the second derivative across interior knots.
    pub fn max_second_jump(&self) -> f64 {
        let n = self.xs.len();
        let mut worst: f64 = 0.0;
        for k in 1..n - 1 {
            let hl = self.xs[k] - self.xs[k - 1];
            let hr = self.xs[k + 1] - self.xs[k];
            let left = (6.0 * self.ys[k - 1] - 6.0 * self.ys[k]) / (hl * hl) + (2.0 * self.ms[k - 1] + 4.0 * self.ms[k]) / hl;
            let right = (-6.0 * self.ys[k] + 6.0 * self.ys[k + 1]) / (hr * hr) + (-4.0 * self.ms[k] - 2.0 * self.ms[k + 1]) / hr;
            let scale = 1.0 + left.abs().max(right.abs());
            worst = worst.max((left - right).abs() / scale);
        }
        worst
    }
}

fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

pub const SECOND_JUMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub alpha: HermiteCurve,
    pub beta: HermiteCurve,
    pub r_min: f64,
    pub r_max: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorridorPoint {
    pub alpha: f64,
    pub beta: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
    pub dd_alpha: f64,
    pub dd_beta: f64,
    pub g: f64,
}

impl Corridor {
    pub fn constant(alpha: f64, beta: f64) -> Result<Self> {
        Self::from_curves(HermiteCurve::constant(alpha), HermiteCurve::constant(beta))
    }

    pub fn from_knots(xs: &[f64], alpha: &[f64], beta: &[f64]) -> Result<Self> {
        Self::from_curves(HermiteCurve::clamped(xs, alpha)?, HermiteCurve::clamped(xs, beta)?)
    }

    /// Builds the corridor and its bound constants from a dense sampling of the knot range.
    pub fn from_curves(alpha: HermiteCurve, beta: HermiteCurve) -> Result<Self> {
        for c in [&alpha, &beta] {
            if c.max_second_jump() > SECOND_JUMP_TOL {
                return Err(Error::InvalidConfig(format!(
                    "corridor second derivative jumps by {:e} at a knot",
                    c.max_second_jump()
                )));
            }
        }
        let lo = alpha.xs[0].min(beta.xs[0]);
        let hi = alpha.xs[alpha.xs.len() - 1].max(beta.xs[beta.xs.len() - 1]);
        let mut r_min = f64::INFINITY;
        let mut r_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        let samples = 2000;
        for k in 0..=samples {
            let x = lo + (hi - lo) * k as f64 / samples as f64;
            let a = alpha.eval(x).0;
            let b = beta.eval(x).0;
            r_min = r_min.min(b - a);
            r_max = r_max.max(b - a);
            g_min = g_min.min(a);
            g_max = g_max.max(b);
        }
        if r_min <= 0.0 {
            return Err(Error::InvalidConfig("corridor width must stay positive".into()));
        }
        Ok(Self { alpha, beta, r_min, r_max, gamma_min: g_min, gamma_max: g_max })
    }

    /// Reads a knot table with header `x,alpha,beta`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            alpha: f64,
            beta: f64,
        }
        let mut rdr = csv::Reader::from_path(path)?;
        let mut xs = Vec::new();
        let mut al = Vec::new();
        let mut be = Vec::new();
        for row in rdr.deserialize() {
            let r: Row = row?;
            xs.push(r.x);
            al.push(r.alpha);
            be.push(r.beta);
        }
        Self::from_knots(&xs, &al, &be)
    }

    /// Largest boundary slope over the knot range, sampled.
    pub fn max_slope(&self) -> f64 {
        let lo = self.alpha.xs[0].min(self.beta.xs[0]);
        let hi = self.alpha.xs[self.alpha.xs.len() - 1].max(self.beta.xs[self.beta.xs.len() - 1]);
        let mut m: f64 = 0.0;
        for k in 0..=2000 {
            let x = lo + (hi - lo) * k as f64 / 2000.0;
            m = m.max(self.alpha.eval(x).1.abs()).max(self.beta.eval(x).1.abs());
        }
        m
    }

    pub fn bounds(&self, x: f64) -> (f64, f64) {
        (self.alpha.eval(x).0, self.beta.eval(x).0)
    }
}

/// Boundary values, derivatives and the slope blend
/// g = ((β−y)α′ + (y−α)β′)/(β−α).
pub fn corridor_geometry(c: &Corridor, x: f64, y: f64) -> Result<CorridorPoint> {
    let (a, da, dda) = c.alpha.eval(x);
    let (b, db, ddb) = c.beta.eval(x);
    if !(y > a && y < b) {
        return Err(Error::CorridorExit { vehicle: usize::MAX, x });
    }
    let g = ((b - y) * da + (y - a) * db) / (b - a);
    Ok(CorridorPoint { alpha: a, beta: b, d_alpha: da, d_beta: db, dd_alpha: dda, dd_beta: ddb, g })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RoadSpec {
    ConstantWidth { a: f64 },
    CorridorSet { corridors: Vec<Corridor> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    SpeedLow,
    SpeedHigh,
    Orientation,
    Lateral,
    CorridorLow,
    CorridorHigh,
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub kind: ConstraintKind,
    pub i: usize,
    pub j: Option<usize>,
    pub value: f64,
}

impl std::fmt::Display for Margin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.j {
            Some(j) => write!(f, "{:?}[{},{}] margin {:.3e}", self.kind, self.i, j, self.value),
            None => write!(f, "{:?}[{}] margin {:.3e}", self.kind, self.i, self.value),
        }
    }
}

/// Every constraint margin of the admissible set, positive inside.
/// Pair entries are listed for i < j in ascending order.
pub fn margins(state: &FleetState, cfg: &FleetConfig, road: &RoadSpec) -> Result<Vec<Margin>> {
    let n = state.len();
    if n != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: n });
    }
    if let RoadSpec::CorridorSet { corridors } = road {
        if corridors.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: corridors.len() });
        }
    }
    let mut out = Vec::with_capacity(5 * n + n * (n.saturating_sub(1)) / 2);
    for (i, s) in state.vehicles.iter().enumerate() {
        out.push(Margin { kind: ConstraintKind::SpeedLow, i, j: None, value: s.v });
        out.push(Margin { kind: ConstraintKind::SpeedHigh, i, j: None, value: cfg.v_max - s.v });
        out.push(Margin { kind: ConstraintKind::Orientation, i, j: None, value: cfg.phi - s.theta.abs() });
        match road {
            RoadSpec::ConstantWidth { a } => {
                out.push(Margin { kind: ConstraintKind::Lateral, i, j: None, value: a - s.y.abs() });
            }
            RoadSpec::CorridorSet { corridors } => {
                let (al, be) = corridors[i].bounds(s.x);
                out.push(Margin { kind: ConstraintKind::CorridorLow, i, j: None, value: s.y - al });
                out.push(Margin { kind: ConstraintKind::CorridorHigh, i, j: None, value: be - s.y });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let a = &state.vehicles[i];
            let b = &state.vehicles[j];
            let d = elliptic_distance((a.x, a.y), (b.x, b.y), cfg.p.get(i, j));
            out.push(Margin { kind: ConstraintKind::Collision, i, j: Some(j), value: d - cfg.l.get(i, j) });
        }
    }
    Ok(out)
}

/// Constraints that fail (margin ≤ 0). Empty iff the state is strictly inside.
pub fn validate_membership(state: &FleetState, cfg: &FleetConfig, road: &RoadSpec) -> Result<Vec<Margin>> {
    Ok(margins(state, cfg, road)?.into_iter().filter(|m| !(m.value > 0.0)).collect())
}

pub fn min_pair_distance(state: &FleetState, cfg: &FleetConfig) -> f64 {
    let mut best = f64::INFINITY;
    let n = state.len();
    for i in 0..n {
        for j in i + 1..n {
            let a = &state.vehicles[i];
            let b = &state.vehicles[j];
            best = best.min(elliptic_distance((a.x, a.y), (b.x, b.y), cfg.p.get(i, j)));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg2() -> FleetConfig {
        FleetConfig::uniform(2, 5.0, 35.0, 0.25, 4.25, 5.59, 25.0).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(elliptic_distance((0.0, 0.0), (3.0, 4.0), 1.0), 5.0);
        assert_eq!(elliptic_distance((0.0, 0.0), (0.0, 0.0), 4.25), 0.0);
        let oracle = (9.0f64 + 4.25 * 16.0).sqrt();
        assert_relative_eq!(elliptic_distance((0.0, 0.0), (3.0, 4.0), 4.25), oracle, max_relative = 1e-15);
        assert_relative_eq!(oracle, 8.774964387392123, max_relative = 1e-12);
    }

    #[test]
    fn interior_point_is_member() {
        let cfg = cfg2();
        let s = FleetState::new(0.0, vec![VehicleState::new(0.0, 0.0, 0.0, 30.0), VehicleState::new(40.0, 0.0, 0.0, 30.0)]);
        assert!(validate_membership(&s, &cfg, &RoadSpec::ConstantWidth { a: 7.2 }).unwrap().is_empty());
    }

    #[test]
    fn speed_at_limit_is_violation() {
        let cfg = cfg2();
        let s = FleetState::new(0.0, vec![VehicleState::new(0.0, 0.0, 0.0, 35.0), VehicleState::new(40.0, 0.0, 0.0, 30.0)]);
        let rep = validate_membership(&s, &cfg, &RoadSpec::ConstantWidth { a: 7.2 }).unwrap();
        assert_eq!(rep.len(), 1);
        assert_eq!(rep[0].kind, ConstraintKind::SpeedHigh);
        assert_eq!(rep[0].value, 0.0);
    }

    #[test]
    fn contact_is_violation() {
        let cfg = FleetConfig::uniform(2, 5.0, 35.0, 0.25, 1.0, 6.0, 25.0).unwrap();
        let s = FleetState::new(0.0, vec![VehicleState::new(0.0, 0.0, 0.0, 30.0), VehicleState::new(6.0, 0.0, 0.0, 30.0)]);
        let rep = validate_membership(&s, &cfg, &RoadSpec::ConstantWidth { a: 7.2 }).unwrap();
        assert!(rep.iter().any(|m| m.kind == ConstraintKind::Collision && m.j == Some(1)));
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = cfg2();
        let s = FleetState::new(0.0, vec![VehicleState::new(0.0, 0.0, 0.0, 30.0)]);
        assert!(matches!(
            validate_membership(&s, &cfg, &RoadSpec::ConstantWidth { a: 7.2 }),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn constant_corridor_geometry() {
        let c = Corridor::constant(-7.2, 7.2).unwrap();
        let p = corridor_geometry(&c, 12.0, 3.0).unwrap();
        assert_eq!((p.g, p.d_alpha, p.d_beta, p.dd_alpha, p.dd_beta), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(corridor_geometry(&c, 0.0, 7.2).is_err());
    }

    #[test]
    fn slanted_corridor_blend() {
        let xs: Vec<f64> = (0..6).map(|k| k as f64 * 10.0).collect();
        let al: Vec<f64> = xs.iter().map(|x| 0.1 * x - 2.0).collect();
        let be: Vec<f64> = xs.iter().map(|x| 0.1 * x + 2.0).collect();
        // Clamped ends bend the slope, so check well inside where it is nearly linear.
        let c = Corridor::from_knots(&xs, &al, &be).unwrap();
        let p = corridor_geometry(&c, 25.0, 2.5).unwrap();
        assert_relative_eq!(p.g, p.d_alpha, max_relative = 1e-12);
        let mid = 0.5 * (p.alpha + p.beta);
        let q = corridor_geometry(&c, 25.0, mid).unwrap();
        assert_relative_eq!(q.g, 0.5 * (q.d_alpha + q.d_beta), max_relative = 1e-12);
    }

    #[test]
    fn corridor_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "x,alpha,beta\n0,-7.2,7.2\n50,-7.2,7.2\n100,-2,2\n150,-2,2\n").unwrap();
        let c = Corridor::from_csv(&path).unwrap();
        assert!(c.r_min > 3.0 && c.r_min <= 4.0 && c.r_max >= 14.4);
        let (a, b) = c.bounds(200.0);
        assert_eq!((a, b), (-2.0, 2.0));
    }

    fn test_curve() -> HermiteCurve {
        let xs = [0.0, 20.0, 35.0, 60.0, 80.0, 120.0];
        let ys = [1.0, 1.5, -0.5, 2.0, 2.2, 0.0];
        HermiteCurve::clamped(&xs, &ys).unwrap()
    }

    #[test]
    fn spline_is_c2_at_knots() {
        assert!(test_curve().max_second_jump() < 1e-12);
    }

    proptest! {
        #[test]
        fn distance_symmetric(x1 in -1e3..1e3f64, y1 in -10.0..10.0f64, x2 in -1e3..1e3f64, y2 in -10.0..10.0f64, p in 0.1..10.0f64) {
            prop_assert_eq!(elliptic_distance((x1, y1), (x2, y2), p), elliptic_distance((x2, y2), (x1, y1), p));
            let d = elliptic_distance((x1, y1), (x2, y2), p);
            prop_assert!(d >= 0.0);
            prop_assert_eq!(d == 0.0, x1 == x2 && y1 == y2);
        }

        #[test]
        fn curve_derivatives_match_differences(x in 0.5..119.5f64) {
            let c = test_curve();
            let h = 1e-5;
            let (_, d1, d2) = c.eval(x);
            let fd1 = (c.eval(x + h).0 - c.eval(x - h).0) / (2.0 * h);
            let fd2 = (c.eval(x + h).1 - c.eval(x - h).1) / (2.0 * h);
            prop_assert!((d1 - fd1).abs() <= 1e-6 * (1.0 + d1.abs()));
            prop_assert!((d2 - fd2).abs() <= 1e-6 * (1.0 + d2.abs()));
        }

        #[test]
        fn shrinking_margin_keeps_violation(v in 35.0..40.0f64, shrink in 0.0..5.0f64) {
            let cfg = cfg2();
            let road = RoadSpec::ConstantWidth { a: 7.2 };
            let mk = |v: f64| FleetState::new(0.0, vec![VehicleState::new(0.0, 0.0, 0.0, v), VehicleState::new(40.0, 0.0, 0.0, 30.0)]);
            let before = validate_membership(&mk(v), &cfg, &road).unwrap();
            let after = validate_membership(&mk(v + shrink), &cfg, &road).unwrap();
            prop_assert!(!before.is_empty());
            prop_assert!(after.len() >= before.len());
        }
    }
}
