//! Versioned JSON scenario configuration.
//!
//! Micro sections are in SI units unless `units.speed` says "km/h"; loading
//! converts to m/s and fills every parameter from the named preset. Macro
//! sections use traffic units throughout (km, h, veh/km, km/h).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::macrolab::setups::{BeltSetup, DecaySetup, PlatoonSetup, WaveSetup};
use crate::microsim::{preset_scenario, Scenario, PRESETS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Micro,
    Macro,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SpeedUnit {
    #[default]
    #[serde(rename = "m/s")]
    MetresPerSecond,
    #[serde(rename = "km/h")]
    KilometresPerHour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default)]
    pub speed: SpeedUnit,
}

/// Scalar parameters of a micro preset. Missing entries are taken from the preset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_pen: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroSection {
    pub preset: String,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub params: MicroParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MacroModelSpec {
    /// Reduced model on the congestion belt at the given v* [km/h].
    HeatEq { v_star: f64 },
    /// LWR on the congestion belt.
    Lwr,
    /// Inviscid macro-NCC traveling-wave run.
    NccWave,
    /// Macro-PRCC particles from the dense platoon.
    PrccPlatoon,
    /// ARZ from the dense platoon.
    ArzPlatoon,
    /// Balanced macro-PRCC particles for functional decay.
    PrccDecay,
}

impl MacroModelSpec {
    pub fn label(&self) -> String {
        match self {
            Self::HeatEq { v_star } => format!("heat-eq-v{v_star}"),
            Self::Lwr => "lwr".into(),
            Self::NccWave => "ncc-wave".into(),
            Self::PrccPlatoon => "prcc-platoon".into(),
            Self::ArzPlatoon => "arz-platoon".into(),
            Self::PrccDecay => "prcc-decay".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroSection {
    pub models: Vec<MacroModelSpec>,
    #[serde(default)]
    pub belt: BeltSetup,
    #[serde(default)]
    pub wave: WaveSetup,
    #[serde(default)]
    pub platoon: PlatoonSetup,
    #[serde(default)]
    pub decay: DecaySetup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub id: String,
    pub kind: Kind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro: Option<MicroSection>,
    #[serde(default, rename = "macro", skip_serializing_if = "Option::is_none")]
    pub macro_: Option<MacroSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Snapshot times [s for micro, h for macro]; empty selects per-model defaults.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
}

fn default_seed() -> u64 {
    1
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("{field}: {msg}"))
}

impl ScenarioConfig {
    /// Minimal micro config naming a preset, expanded.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        Self {
            schema: SCHEMA_VERSION,
            id: format!("{name}-seed{seed}"),
            kind: Kind::Micro,
            seed,
            micro: Some(MicroSection { preset: name.into(), units: Units::default(), params: MicroParams::default() }),
            macro_: None,
            out_dir: None,
            checkpoints: vec![],
        }
        .expand()
    }

    /// Reduced model at v* = 102 and 51 km/h against LWR on the congestion belt.
    pub fn belt_comparison() -> Result<Self> {
        Self {
            schema: SCHEMA_VERSION,
            id: "belt-comparison".into(),
            kind: Kind::Compare,
            seed: 1,
            micro: None,
            macro_: Some(MacroSection {
                models: vec![MacroModelSpec::HeatEq { v_star: 102.0 }, MacroModelSpec::HeatEq { v_star: 51.0 }, MacroModelSpec::Lwr],
                belt: BeltSetup::default(),
                wave: WaveSetup::default(),
                platoon: PlatoonSetup::default(),
                decay: DecaySetup::default(),
            }),
            out_dir: None,
            checkpoints: vec![],
        }
        .expand()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("parse error: {e}")))?;
        cfg.expand()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks every constraint and fills micro parameters from the preset.
    pub fn expand(mut self) -> Result<Self> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid("schema", format!("version {} is not supported (expected {SCHEMA_VERSION})", self.schema)));
        }
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(invalid("id", "must be a non-empty file name"));
        }
        if self.checkpoints.iter().any(|t| !(*t >= 0.0)) || self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("checkpoints", "must be non-negative and strictly increasing"));
        }
        match self.kind {
            Kind::Micro => {
                if self.macro_.is_some() {
                    return Err(invalid("macro", "not allowed for kind \"micro\""));
                }
                let m = self.micro.as_mut().ok_or_else(|| invalid("micro", "required for kind \"micro\""))?;
                expand_micro(m, self.seed)?;
                if let Some(&t) = self.checkpoints.last() {
                    if t > m.params.t_end.expect("expanded") {
                        return Err(invalid("checkpoints", format!("{t} s lies beyond t_end")));
                    }
                }
            }
            Kind::Macro | Kind::Compare => {
                if self.micro.is_some() {
                    return Err(invalid("micro", "not allowed for macro or compare runs"));
                }
                let m = self.macro_.as_ref().ok_or_else(|| invalid("macro", "required for macro and compare runs"))?;
                match (self.kind, m.models.len()) {
                    (Kind::Macro, 1) => {}
                    (Kind::Macro, k) => return Err(invalid("macro.models", format!("kind \"macro\" takes exactly one model, got {k}"))),
                    (_, 0) => return Err(invalid("macro.models", "compare needs at least one model")),
                    _ => {}
                }
                validate_macro(m)?;
            }
        }
        Ok(self)
    }

    /// The micro scenario with every configured parameter applied.
    pub fn scenario(&self) -> Result<Scenario> {
        let m = self.micro.as_ref().ok_or_else(|| invalid("micro", "missing"))?;
        let mut sc = preset_scenario(&m.preset, self.seed)?;
        apply(&mut sc, &m.params);
        Ok(sc)
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    load_config_with_seed(path, None)
}

/// Loads a config, replacing its seed before expansion when one is given.
pub fn load_config_with_seed(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    let mut cfg: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: parse error: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.expand().map_err(|e| match e {
        Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn apply(sc: &mut Scenario, p: &MicroParams) {
    if let Some(v) = &p.v_star {
        sc.ctrl.v_star = v.clone();
    }
    macro_rules! set {
        ($src:ident => $($dst:tt)+) => {
            if let Some(x) = p.$src {
                $($dst)+ = x;
            }
        };
    }
    set!(v_max => sc.fleet.v_max);
    set!(phi => sc.fleet.phi);
    set!(gamma => sc.ctrl.gamma);
    set!(big_gamma => sc.ctrl.big_gamma);
    set!(a_pen => sc.ctrl.a_pen);
    set!(b => sc.ctrl.b);
    set!(t_end => sc.icfg.t_end);
    set!(sample_dt => sc.icfg.sample_dt);
    set!(tol_abs => sc.icfg.tol_abs);
    set!(tol_rel => sc.icfg.tol_rel);
}

fn expand_micro(m: &mut MicroSection, seed: u64) -> Result<()> {
    if !PRESETS.contains(&m.preset.as_str()) {
        return Err(invalid("micro.preset", format!("unknown preset '{}' (known: {})", m.preset, PRESETS.join(", "))));
    }
    if m.units.speed == SpeedUnit::KilometresPerHour {
        if let Some(v) = m.params.v_star.as_mut() {
            v.iter_mut().for_each(|x| *x /= 3.6);
        }
        if let Some(v) = m.params.v_max.as_mut() {
            *v /= 3.6;
        }
        m.units.speed = SpeedUnit::MetresPerSecond;
    }
    let mut sc = preset_scenario(&m.preset, seed)?;
    let p = &mut m.params;
    p.v_star.get_or_insert_with(|| sc.ctrl.v_star.clone());
    p.v_max.get_or_insert(sc.fleet.v_max);
    p.phi.get_or_insert(sc.fleet.phi);
    p.gamma.get_or_insert(sc.ctrl.gamma);
    p.big_gamma.get_or_insert(sc.ctrl.big_gamma);
    p.a_pen.get_or_insert(sc.ctrl.a_pen);
    p.b.get_or_insert(sc.ctrl.b);
    p.t_end.get_or_insert(sc.icfg.t_end);
    p.sample_dt.get_or_insert(sc.icfg.sample_dt);
    p.tol_abs.get_or_insert(sc.icfg.tol_abs);
    p.tol_rel.get_or_insert(sc.icfg.tol_rel);

    let vs = p.v_star.as_ref().expect("filled");
    let v_max = p.v_max.expect("filled");
    let phi = p.phi.expect("filled");
    if vs.is_empty() || vs.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid("micro.params.v_star", "desired speeds must be positive"));
    }
    if !(v_max > 0.0) || !(phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
        return Err(invalid("micro.params", "need v_max > 0 and 0 < phi < pi/2"));
    }
    let ratio = vs.iter().cloned().fold(0.0, f64::max) / v_max;
    if !(phi.cos() > ratio) {
        return Err(invalid(
            "micro.params",
            format!("admissibility cos φ > v*/v_max fails: cos φ = {:.6}, v*/v_max = {ratio:.6}", phi.cos()),
        ));
    }
    apply(&mut sc, p);
    let ctx = |e: Error| match e {
        Error::InvalidConfig(msg) => invalid("micro.params", msg),
        other => other,
    };
    sc.fleet.validate().map_err(ctx)?;
    sc.ctrl.validate(&sc.fleet).map_err(ctx)?;
    sc.icfg.validate().map_err(ctx)?;
    Ok(())
}

fn validate_macro(m: &MacroSection) -> Result<()> {
    let positive = |field: &str, x: f64| if x > 0.0 { Ok(()) } else { Err(invalid(field, format!("must be positive, got {x}"))) };
    let cfl = |field: &str, x: f64| if x > 0.0 && x <= 1.0 { Ok(()) } else { Err(invalid(field, format!("must lie in (0, 1], got {x}"))) };
    let ctx = |field: &'static str| move |e: Error| match e {
        Error::InvalidConfig(msg) => invalid(field, msg),
        other => other,
    };
    for spec in &m.models {
        match *spec {
            MacroModelSpec::HeatEq { v_star } => {
                let b = &m.belt;
                if !(v_star > 0.0 && v_star < b.v_max) {
                    return Err(invalid("macro.models.heat-eq.v_star", format!("{v_star} must lie in (0, belt.v_max = {})", b.v_max)));
                }
                for (f, x) in [("macro.belt.dx_heat", b.dx_heat), ("macro.belt.t_end", b.t_end), ("macro.belt.sample_dt", b.sample_dt)] {
                    positive(f, x)?;
                }
                cfl("macro.belt.cfl", b.cfl)?;
                b.heat_params(v_star).validate().map_err(ctx("macro.belt"))?;
            }
            MacroModelSpec::Lwr => {
                let b = &m.belt;
                for (f, x) in [("macro.belt.dx_lwr", b.dx_lwr), ("macro.belt.t_end", b.t_end), ("macro.belt.sample_dt", b.sample_dt)] {
                    positive(f, x)?;
                }
                cfl("macro.belt.cfl", b.cfl)?;
                b.lwr.validate().map_err(ctx("macro.belt.lwr"))?;
                if !(b.lwr_domain.1 > b.lwr_domain.0) {
                    return Err(invalid("macro.belt.lwr_domain", "must be an increasing pair"));
                }
            }
            MacroModelSpec::NccWave => {
                let w = &m.wave;
                w.params().and_then(|p| p.validate()).map_err(ctx("macro.wave"))?;
                cfl("macro.wave.cfl", w.cfl)?;
                if w.checkpoints.is_empty() || w.checkpoints.iter().any(|t| !(*t >= 0.0)) {
                    return Err(invalid("macro.wave.checkpoints", "need at least one non-negative time"));
                }
            }
            MacroModelSpec::PrccPlatoon | MacroModelSpec::ArzPlatoon => {
                let p = &m.platoon;
                p.params(1.0).validate().map_err(ctx("macro.platoon"))?;
                p.arz.law.validate().map_err(ctx("macro.platoon.arz"))?;
                for (f, x) in [("macro.platoon.t_end", p.t_end), ("macro.platoon.sample_dt", p.sample_dt), ("macro.platoon.arz.k_bar", p.arz.k_bar)] {
                    positive(f, x)?;
                }
                if p.particles < 2 || p.arz_cells < 3 {
                    return Err(invalid("macro.platoon", "need at least 2 particles and 3 ARZ cells"));
                }
            }
            MacroModelSpec::PrccDecay => {
                let d = &m.decay;
                if d.particles < 2 || d.samples < 2 {
                    return Err(invalid("macro.decay", "need at least 2 particles and 2 samples"));
                }
                positive("macro.decay.horizon_in_relaxation_times", d.horizon_in_relaxation_times)?;
                positive("macro.decay.tol", d.tol)?;
            }
        }
    }
    Ok(())
}
