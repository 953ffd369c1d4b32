//! Macroscopic parameters: pressure, viscosity, relaxation and the speed
//! transforms 𝒢, Θ of the pseudo-relativistic model. Lengths are in km, speeds
//! in km/h, time in h, densities in veh/km.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shapes::{MonotoneG, SaturationEll, ScalarShape, SigmaShaper, VehiclePotential, ViscosityKernel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum PressureLaw {
    /// No pressure at all.
    Zero,
    /// P(ρ) = −mΦ′(m/ρ) from a pair potential Φ (lengths in km).
    Potential { phi: VehiclePotential },
    /// P′(ρ) = (ρ−ρ̄)²/(ρ_max−ρ) above ρ̄, zero below.
    GapQuadratic,
    /// P′(ρ) = scale·(ρ−ρ̄)²/(ρ(ρ_max−ρ)) above ρ̄, zero below.
    LogBarrier { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ViscosityLaw {
    Zero,
    /// μ(ρ) = (m²/ρ)K(m/ρ) from a viscosity kernel K (lengths in km).
    Kernel { kernel: ViscosityKernel },
    /// μ(ρ) = ρP′(ρ)/k̃.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum MacroRelaxation {
    /// f(v − v*) = k(v − v*).
    Linear { k: f64 },
    /// f(v − v*) = k̃𝒢(v).
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroParams {
    /// Total mass [veh].
    pub m: f64,
    pub rho_max: f64,
    pub rho_bar: f64,
    pub v_max: f64,
    pub v_star: f64,
    pub pressure: PressureLaw,
    pub viscosity: ViscosityLaw,
    pub relax: MacroRelaxation,
    pub k_tilde: f64,
    /// γ of the NCC gain J.
    pub gamma: f64,
    pub ell: SaturationEll,
    pub g: MonotoneG,
    pub sigma: SigmaShaper,
}

/// Table-1 mapping from the scaled pair potential Φ and kernel K to macroscopic
/// quantities: ρ_max = m/L, ρ̄ = m/λ.
pub fn micro_to_macro(
    phi: VehiclePotential,
    kernel: Option<ViscosityKernel>,
    m: f64,
    v_max: f64,
    v_star: f64,
) -> Result<MacroParams> {
    let (l, lambda) = (phi.blow_up(), phi.cutoff());
    if !(l > 0.0 && lambda > l && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("potential needs a blow-up 0 < L < λ < ∞, got L = {l}, λ = {lambda}")));
    }
    if let Some(ViscosityKernel::QuadraticCutoff { l: kl, lambda: kla, .. }) = kernel {
        if (kl - l).abs() > 1e-12 * l || (kla - lambda).abs() > 1e-12 * lambda {
            return Err(Error::InvalidConfig("kernel and potential must share L and λ".into()));
        }
    }
    let p = MacroParams {
        m,
        rho_max: m / l,
        rho_bar: m / lambda,
        v_max,
        v_star,
        pressure: PressureLaw::Potential { phi },
        viscosity: kernel.map_or(ViscosityLaw::Zero, |kernel| ViscosityLaw::Kernel { kernel }),
        relax: MacroRelaxation::Linear { k: 1.0 },
        k_tilde: 1.0,
        gamma: 1.0,
        ell: SaturationEll::hinge(0.2),
        g: MonotoneG::Identity,
        sigma: SigmaShaper::new(1e-3, 1.0),
    };
    p.validate()?;
    Ok(p)
}

impl MacroParams {
    /// Pressure-free parameter set; callers fill in the laws they need.
    pub fn new(m: f64, rho_max: f64, rho_bar: f64, v_max: f64, v_star: f64) -> Self {
        Self {
            m,
            rho_max,
            rho_bar,
            v_max,
            v_star,
            pressure: PressureLaw::Zero,
            viscosity: ViscosityLaw::Zero,
            relax: MacroRelaxation::Balanced,
            k_tilde: 1.0,
            gamma: 1.0,
            ell: SaturationEll::hinge(0.2),
            g: MonotoneG::Identity,
            sigma: SigmaShaper::new(1e-3, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0) {
            return Err(Error::InvalidConfig(format!("total mass must be positive, got {}", self.m)));
        }
        if !(0.0 < self.rho_bar && self.rho_bar < self.rho_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < rho_bar < rho_max, got {} and {}",
                self.rho_bar, self.rho_max
            )));
        }
        if !(0.0 < self.v_star && self.v_star < self.v_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < v* < v_max, got {} and {}",
                self.v_star, self.v_max
            )));
        }
        if !(self.k_tilde > 0.0 && self.gamma > 0.0) {
            return Err(Error::InvalidConfig("k_tilde and gamma must be positive".into()));
        }
        if let ViscosityLaw::Balanced = self.viscosity {
            if let PressureLaw::Zero = self.pressure {
                return Err(Error::InvalidConfig("balanced viscosity needs a pressure law".into()));
            }
        }
        Ok(())
    }

    /// Blow-up length L = m/ρ_max [km].
    pub fn l(&self) -> f64 {
        self.m / self.rho_max
    }

    /// Interaction length λ = m/ρ̄ [km].
    pub fn lambda(&self) -> f64 {
        self.m / self.rho_bar
    }

    fn check_density(&self, rho: f64) -> Result<()> {
        if !(rho >= 0.0 && rho < self.rho_max) {
            return Err(Error::Domain { what: "density", value: rho });
        }
        Ok(())
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        if rho <= self.rho_bar {
            return Ok(0.0);
        }
        let (rb, rm) = (self.rho_bar, self.rho_max);
        Ok(match self.pressure {
            PressureLaw::Zero => 0.0,
            PressureLaw::Potential { phi } => -self.m * phi.eval2(self.m / rho)?.1,
            PressureLaw::GapQuadratic => {
                let a = rm - rb;
                let u = rm - rho;
                a * a * (a / u).ln() - 2.0 * a * (rho - rb) + 0.5 * (a * a - u * u)
            }
            PressureLaw::LogBarrier { scale } => {
                scale
                    * rb
                    * (1.0 - rho / rb - (rm - rb) * (rm - rb) / (rb * rm) * ((rm - rho) / (rm - rb)).ln()
                        + rb / rm * (rho / rb).ln())
            }
        })
    }

    pub fn dpressure(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        if rho <= self.rho_bar {
            return Ok(0.0);
        }
        let (rb, rm) = (self.rho_bar, self.rho_max);
        Ok(match self.pressure {
            PressureLaw::Zero => 0.0,
            PressureLaw::Potential { phi } => {
                let d = self.m / rho;
                phi.eval2(d)?.2 * d * d
            }
            PressureLaw::GapQuadratic => (rho - rb).powi(2) / (rm - rho),
            PressureLaw::LogBarrier { scale } => scale * (rho - rb).powi(2) / (rho * (rm - rho)),
        })
    }

    /// Dynamic viscosity μ(ρ).
    pub fn viscosity(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        if rho <= 0.0 {
            return Ok(0.0);
        }
        Ok(match self.viscosity {
            ViscosityLaw::Zero => 0.0,
            ViscosityLaw::Kernel { kernel } => self.m * self.m / rho * kernel.value(self.m / rho)?,
            ViscosityLaw::Balanced => rho * self.dpressure(rho)? / self.k_tilde,
        })
    }

    /// Scaled pair potential Φ(d).
    pub fn phi(&self, d: f64) -> Result<f64> {
        if let PressureLaw::Potential { phi } = self.pressure {
            return Ok(phi.eval2(d)?.0);
        }
        if !(d > self.l()) {
            return Err(Error::Domain { what: "scaled spacing", value: d });
        }
        let rho = self.m / d;
        if rho <= self.rho_bar {
            return Ok(0.0);
        }
        // Φ(d) = ∫_{ρ̄}^{m/d} P(r)/r² dr
        adaptive_simpson(&|r: f64| self.pressure(r).unwrap_or(f64::NAN) / (r * r), self.rho_bar, rho, 1e-10 * (1.0 + rho))
    }

    /// Φ′(d) = −P(m/d)/m.
    pub fn dphi(&self, d: f64) -> Result<f64> {
        if let PressureLaw::Potential { phi } = self.pressure {
            return Ok(phi.eval2(d)?.1);
        }
        if !(d > self.l()) {
            return Err(Error::Domain { what: "scaled spacing", value: d });
        }
        Ok(-self.pressure(self.m / d)? / self.m)
    }

    /// Scaled viscosity kernel K(d), consistent with μ(ρ) = (m²/ρ)K(m/ρ).
    pub fn kernel(&self, d: f64) -> Result<f64> {
        if !(d > self.l()) {
            return Err(Error::Domain { what: "scaled spacing", value: d });
        }
        match self.viscosity {
            ViscosityLaw::Zero => Ok(0.0),
            ViscosityLaw::Kernel { kernel } => kernel.value(d),
            ViscosityLaw::Balanced => Ok(self.viscosity(self.m / d)? / (self.m * d)),
        }
    }

    pub fn relaxation(&self, v: f64) -> f64 {
        match self.relax {
            MacroRelaxation::Linear { k } => k * (v - self.v_star),
            MacroRelaxation::Balanced => self.k_tilde * self.big_g(v),
        }
    }

    /// q̃(v) = v_max²(v_max v − 2v*v + v*v_max)/(2(v_max−v)²v²).
    pub fn q_tilde(&self, v: f64) -> f64 {
        let (vm, vs) = (self.v_max, self.v_star);
        vm * vm * (vm * v - 2.0 * vs * v + vs * vm) / (2.0 * (vm - v).powi(2) * v * v)
    }

    fn g_antiderivative(&self, v: f64) -> f64 {
        let (vm, vs) = (self.v_max, self.v_star);
        0.5 * vm * ((v / (vm - v)).ln() - vs / v + (vm - vs) / (vm - v))
    }

    /// 𝒢(v) = ∫_{v*}^{v} q̃, in closed form.
    pub fn big_g(&self, v: f64) -> f64 {
        self.g_antiderivative(v) - self.g_antiderivative(self.v_star)
    }

    /// Θ(v) = ∫_{v*}^{v} (l − v*)q̃(l) dl = v_max²(v−v*)²/(2(v_max−v)v).
    pub fn theta(&self, v: f64) -> f64 {
        let vm = self.v_max;
        vm * vm * (v - self.v_star).powi(2) / (2.0 * (vm - v) * v)
    }

    /// Inverse of 𝒢 on (0, v_max): Newton steps kept inside a shrinking bracket.
    pub fn big_g_inv(&self, y: f64) -> f64 {
        if y == 0.0 {
            return self.v_star;
        }
        let (mut lo, mut hi) = if y > 0.0 { (self.v_star, self.v_max) } else { (0.0, self.v_star) };
        let mut v = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = self.big_g(v) - y;
            if r > 0.0 {
                hi = v;
            } else {
                lo = v;
            }
            if hi - lo <= 4.0 * f64::EPSILON * self.v_max || r.abs() <= 1e-14 * (1.0 + y.abs()) {
                break;
            }
            let newton = v - r / self.q_tilde(v);
            v = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        v
    }

    /// ω̃ = γ + v_max ℓ(0)/(v*(v_max − v*)).
    pub fn omega_tilde(&self) -> f64 {
        self.j_gain(0.0)
    }

    /// J(s) = γ + v_max ℓ(s)/(v*(v_max − v*)) − s/v*.
    pub fn j_gain(&self, s: f64) -> f64 {
        let (vm, vs) = (self.v_max, self.v_star);
        self.gamma + vm * self.ell.ell(s) / (vs * (vm - vs)) - s / vs
    }

    /// Sets γ so that ω̃ takes the requested value.
    pub fn with_omega_tilde(mut self, omega: f64) -> Result<Self> {
        let (vm, vs) = (self.v_max, self.v_star);
        self.gamma = omega - vm * self.ell.ell(0.0) / (vs * (vm - vs));
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("ω̃ = {omega} is below the saturation floor")));
        }
        Ok(self)
    }

    /// c(v) = sqrt((v_max − v)v).
    pub fn c_speed(&self, v: f64) -> f64 {
        ((self.v_max - v) * v).sqrt()
    }
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return Ok(0.0);
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let r = rec(f, a, b, fa, fm, fb, whole, tol, 40);
    if !r.is_finite() {
        return Err(Error::Domain { what: "quadrature", value: r });
    }
    Ok(r)
}
