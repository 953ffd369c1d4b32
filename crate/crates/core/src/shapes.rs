//! Scalar shape functions with closed-form derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar function evaluable together with its first derivative.
pub trait ScalarShape {
    fn eval(&self, x: f64) -> Result<(f64, f64)>;

    fn value(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x)?.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum VehiclePotential {
    /// z1(λ−d)³/(d−L) on (L, λ], zero beyond.
    RationalCubic { z1: f64, l: f64, lambda: f64 },
}

impl VehiclePotential {
    pub fn rational_cubic(z1: f64, l: f64, lambda: f64) -> Self {
        Self::RationalCubic { z1, l, lambda }
    }

    pub fn cutoff(&self) -> f64 {
        match *self {
            Self::RationalCubic { lambda, .. } => lambda,
        }
    }

    pub fn blow_up(&self) -> f64 {
        match *self {
            Self::RationalCubic { l, .. } => l,
        }
    }

    /// Value, first and second derivative.
    pub fn eval2(&self, d: f64) -> Result<(f64, f64, f64)> {
        match *self {
            Self::RationalCubic { z1, l, lambda } => {
                if !(d > l) {
                    return Err(Error::Domain { what: "vehicle potential", value: d });
                }
                if d >= lambda {
                    return Ok((0.0, 0.0, 0.0));
                }
                let u = lambda - d;
                let w = d - l;
                let v = z1 * u * u * u / w;
                let d1 = z1 * (-3.0 * u * u / w - u * u * u / (w * w));
                let d2 = z1 * (6.0 * u / w + 6.0 * u * u / (w * w) + 2.0 * u * u * u / (w * w * w));
                Ok((v, d1, d2))
            }
        }
    }
}

impl ScalarShape for VehiclePotential {
    fn eval(&self, d: f64) -> Result<(f64, f64)> {
        let (v, d1, _) = self.eval2(d)?;
        Ok((v, d1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum BoundaryPotential {
    /// (1/(a²−y²) − c̄/a²)⁴ outside the flat zone |y| ≤ a√(c̄−1)/√c̄.
    QuarticBarrier { a: f64, cbar: f64 },
}

impl BoundaryPotential {
    pub fn quartic(a: f64, cbar: f64) -> Self {
        Self::QuarticBarrier { a, cbar }
    }

    pub fn flat_edge(&self) -> f64 {
        match *self {
            Self::QuarticBarrier { a, cbar } => a * (cbar - 1.0).sqrt() / cbar.sqrt(),
        }
    }

    pub fn half_width(&self) -> f64 {
        match *self {
            Self::QuarticBarrier { a, .. } => a,
        }
    }
}

impl ScalarShape for BoundaryPotential {
    fn eval(&self, y: f64) -> Result<(f64, f64)> {
        match *self {
            Self::QuarticBarrier { a, cbar } => {
                if !(y.abs() < a) {
                    return Err(Error::Domain { what: "boundary potential", value: y });
                }
                if y.abs() <= self.flat_edge() {
                    return Ok((0.0, 0.0));
                }
                let q = a * a - y * y;
                let r = 1.0 / q - cbar / (a * a);
                let dr = 2.0 * y / (q * q);
                let r3 = r * r * r;
                Ok((r3 * r, 4.0 * r3 * dr))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ViscosityKernel {
    /// z2(λ−d)² on (L, λ], zero beyond.
    QuadraticCutoff { z2: f64, l: f64, lambda: f64 },
}

impl ViscosityKernel {
    pub fn quadratic(z2: f64, l: f64, lambda: f64) -> Self {
        Self::QuadraticCutoff { z2, l, lambda }
    }
}

impl ScalarShape for ViscosityKernel {
    fn eval(&self, d: f64) -> Result<(f64, f64)> {
        match *self {
            Self::QuadraticCutoff { z2, l, lambda } => {
                if !(d > l) {
                    return Err(Error::Domain { what: "viscosity kernel", value: d });
                }
                if d >= lambda {
                    return Ok((0.0, 0.0));
                }
                let u = lambda - d;
                Ok((z2 * u * u, -2.0 * z2 * u))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum SaturationEll {
    SmoothHinge { eta: f64 },
}

impl SaturationEll {
    pub fn hinge(eta: f64) -> Self {
        Self::SmoothHinge { eta }
    }

    pub fn ell(&self, x: f64) -> f64 {
        self.eval_pair(x).0
    }

    pub fn eval_pair(&self, x: f64) -> (f64, f64) {
        match *self {
            Self::SmoothHinge { eta } => {
                if x <= -eta {
                    (0.0, 0.0)
                } else if x < 0.0 {
                    ((x + eta) * (x + eta) / (2.0 * eta), (x + eta) / eta)
                } else {
                    ((eta * eta + 2.0 * eta * x) / (2.0 * eta), 1.0)
                }
            }
        }
    }
}

impl ScalarShape for SaturationEll {
    fn eval(&self, x: f64) -> Result<(f64, f64)> {
        Ok(self.eval_pair(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family")]
pub enum MonotoneG {
    #[default]
    Identity,
    Linear { slope: f64 },
}

impl MonotoneG {
    pub fn g(&self, x: f64) -> f64 {
        self.eval_pair(x).0
    }

    pub fn eval_pair(&self, x: f64) -> (f64, f64) {
        match *self {
            Self::Identity => (x, 1.0),
            Self::Linear { slope } => (slope * x, slope),
        }
    }
}

impl ScalarShape for MonotoneG {
    fn eval(&self, x: f64) -> Result<(f64, f64)> {
        Ok(self.eval_pair(x))
    }
}

/// Sector functions with x·f(x) > 0 for x ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Relaxation {
    Linear { k: f64 },
}

impl Relaxation {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Self::Linear { k } => k * x,
        }
    }
}

impl ScalarShape for Relaxation {
    fn eval(&self, x: f64) -> Result<(f64, f64)> {
        match *self {
            Self::Linear { k } => Ok((k * x, k)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationPair {
    pub f: Relaxation,
    pub fbar: Relaxation,
}

impl Default for RelaxationPair {
    fn default() -> Self {
        Self { f: Relaxation::Linear { k: 0.5 }, fbar: Relaxation::Linear { k: 2.0 } }
    }
}

/// σ(x) = 1 for x ≤ ε, otherwise (ε + (M−ε)·tanh((x−ε)/(M−ε)))/x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaShaper {
    pub eps: f64,
    pub m: f64,
}

impl SigmaShaper {
    pub fn new(eps: f64, m: f64) -> Self {
        Self { eps, m }
    }

    pub fn eval_pair(&self, x: f64) -> (f64, f64) {
        if x <= self.eps {
            return (1.0, 0.0);
        }
        let w = self.m - self.eps;
        let th = ((x - self.eps) / w).tanh();
        let num = self.eps + w * th;
        let dnum = 1.0 - th * th;
        let s = num / x;
        if s >= 1.0 {
            return (1.0, 0.0);
        }
        (s, (dnum * x - num) / (x * x))
    }
}

impl ScalarShape for SigmaShaper {
    fn eval(&self, x: f64) -> Result<(f64, f64)> {
        Ok(self.eval_pair(x))
    }
}

/// Central finite-difference check of a shape's analytic derivative; returns the
/// worst relative error over `xs` (relative to 1 + |f'|).
pub fn derivative_check<S: ScalarShape>(shape: &S, xs: &[f64], h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in xs {
        let (_, d) = shape.eval(x).expect("sample inside domain");
        let fp = shape.eval(x + h).expect("sample inside domain").0;
        let fm = shape.eval(x - h).expect("sample inside domain").0;
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((d - fd).abs() / (1.0 + d.abs()));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v41() -> VehiclePotential {
        VehiclePotential::rational_cubic(1e-4, 5.59, 25.0)
    }

    #[test]
    fn potential_examples() {
        let p = v41();
        assert_eq!(p.eval(25.0).unwrap(), (0.0, 0.0));
        assert_eq!(p.eval(30.0).unwrap(), (0.0, 0.0));
        let oracle = 1e-4 * 10f64.powi(3) / (15.0 - 5.59);
        assert_relative_eq!(p.value(15.0).unwrap(), oracle, max_relative = 1e-14);
        assert_relative_eq!(oracle, 0.01062699, max_relative = 1e-6);
        assert!(p.eval(5.59).is_err());
    }

    #[test]
    fn potential_blows_up() {
        let p = v41();
        let mut prev = 0.0;
        for k in 1..10 {
            let v = p.value(5.59 + 10f64.powi(-k)).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(prev > 1e6);
    }

    #[test]
    fn boundary_examples() {
        let u = BoundaryPotential::quartic(7.2, 1.5);
        assert_eq!(u.value(0.0).unwrap(), 0.0);
        let edge = u.flat_edge();
        assert_relative_eq!(edge, 4.156921938165306, max_relative = 1e-12);
        assert_eq!(u.eval(edge).unwrap(), (0.0, 0.0));
        let oracle = (1.0f64 / (51.84 - 36.0) - 1.5 / 51.84).powi(4);
        let got = u.value(6.0).unwrap();
        assert!((got - oracle).abs() < 1e-18);
        assert!((got - 1.3675e-6).abs() < 1e-10);
        assert!(u.eval(7.2).is_err());
    }

    #[test]
    fn kernel_examples() {
        let k = ViscosityKernel::quadratic(0.03, 5.59, 25.0);
        assert_eq!(k.value(25.0).unwrap(), 0.0);
        assert_relative_eq!(k.value(10.0).unwrap(), 0.03 * 225.0, max_relative = 1e-14);
        assert_relative_eq!(k.value(10.0).unwrap(), 6.75, max_relative = 1e-12);
        assert_eq!(k.value(40.0).unwrap(), 0.0);
    }

    #[test]
    fn ell_examples() {
        let l = SaturationEll::hinge(0.2);
        assert_eq!(l.ell(-0.3), 0.0);
        assert_relative_eq!(l.ell(0.0), 0.1, max_relative = 1e-15);
        assert_relative_eq!(l.ell(1.0), 1.1, max_relative = 1e-15);
        for k in 0..=2000 {
            let x = -10.0 + 20.0 * k as f64 / 2000.0;
            assert!(l.ell(x) >= x.max(0.0));
        }
    }

    #[test]
    fn sigma_examples() {
        let s = SigmaShaper::new(0.001, 1.0);
        assert_eq!(s.eval_pair(0.0).0, 1.0);
        assert_eq!(s.eval_pair(0.001).0, 1.0);
        assert!(s.eval_pair(10.0).0 <= 0.1);
        let mut prev = 1.0;
        for k in 0..=5000 {
            let x = -1.0 + 50.0 * k as f64 / 5000.0;
            let (v, _) = s.eval_pair(x);
            assert!(v <= prev && v > 0.0 && v <= 1.0);
            if x >= s.eps {
                assert!(v * x <= s.m + 1e-15);
            }
            prev = v;
        }
    }

    #[test]
    fn relaxation_defaults() {
        let r = RelaxationPair::default();
        assert_eq!(r.f.apply(2.0), 1.0);
        assert_eq!(r.fbar.apply(2.0), 4.0);
    }

    proptest! {
        #[test]
        fn potential_decreasing(d1 in 5.6..24.99f64, gap in 1e-3..5.0f64) {
            let p = v41();
            let d2 = (d1 + gap).min(24.999);
            prop_assume!(d2 > d1);
            prop_assert!(p.value(d2).unwrap() < p.value(d1).unwrap());
        }

        #[test]
        fn nonnegative(d in 5.6..60.0f64, y in -7.19..7.19f64) {
            prop_assert!(v41().value(d).unwrap() >= 0.0);
            prop_assert!(BoundaryPotential::quartic(7.2, 1.5).value(y).unwrap() >= 0.0);
            prop_assert!(ViscosityKernel::quadratic(0.03, 5.59, 25.0).value(d).unwrap() >= 0.0);
        }

        #[test]
        fn relaxation_sector(x in -30.0..30.0f64) {
            prop_assume!(x != 0.0);
            let r = RelaxationPair::default();
            prop_assert!(x * r.f.apply(x) > 0.0 && x * r.fbar.apply(x) > 0.0);
        }

        #[test]
        fn second_derivative_matches(d in 6.0..24.5f64) {
            let p = v41();
            let h = 1e-6;
            let (_, _, d2) = p.eval2(d).unwrap();
            let fd = (p.eval(d + h).unwrap().1 - p.eval(d - h).unwrap().1) / (2.0 * h);
            prop_assert!((d2 - fd).abs() <= 1e-5 * (1.0 + d2.abs()));
        }
    }
}
