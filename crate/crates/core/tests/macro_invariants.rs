//! Grid solvers conserve mass step by step and keep densities non-negative on
//! random compactly supported data.

use proptest::prelude::*;
use trafficfluid::macrolab::arz::arz_stable_dt;
use trafficfluid::macrolab::heat::heat_stable_dt;
use trafficfluid::macrolab::setups::{c1_plateau, BeltSetup};
use trafficfluid::macrolab::{arz_nt_step, heat_eq_step, lwr_godunov_step, ArzParams, LwrParams, MacroField};

const STEPS: usize = 40;

fn bump(start: f64, len: f64, peak: f64) -> impl Fn(f64) -> f64 {
    move |x| peak * c1_plateau(x, start, start + len, 0.2 * len)
}

fn conserved(f0: &MacroField, mut step: impl FnMut(&MacroField) -> MacroField) -> Result<(), TestCaseError> {
    let m0 = f0.mass();
    let mut f = f0.clone();
    for k in 0..STEPS {
        let g = step(&f);
        prop_assert!(((g.mass() - f.mass()) / m0).abs() < 1e-12, "step {}: {} -> {}", k, f.mass(), g.mass());
        prop_assert!(g.rho.iter().all(|r| *r >= -1e-12 * m0), "step {}: negative density", k);
        f = g;
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lwr_conserves_mass(start in 1.0..3.0f64, len in 0.5..2.0f64, peak in 5.0..120.0f64, a_hat in 1.5..4.0f64) {
        let lp = LwrParams { v_f: 102.0, rho_c: 33.3, a_hat };
        let f0 = MacroField::sample(0.0, 10.0, 400, bump(start, len, peak), |_| 0.0).unwrap();
        let dt = 0.9 * f0.dx / lp.wave_speed_bound();
        conserved(&f0, |f| lwr_godunov_step(f, &lp, dt).unwrap())?;
    }

    #[test]
    fn reduced_model_conserves_mass(start in 0.5..1.5f64, len in 0.3..1.0f64, peak in 5.0..80.0f64, fast in any::<bool>()) {
        let p = BeltSetup::default().heat_params(if fast { 102.0 } else { 51.0 });
        let f0 = MacroField::sample(-1.0, 4.0, 500, bump(start, len, peak), |_| 0.0).unwrap();
        // Below the pressure onset the step bound is unbounded, so cap it.
        conserved(&f0, |f| heat_eq_step(f, &p, (0.9 * heat_stable_dt(f, &p).unwrap()).min(1e-3)).unwrap())?;
    }

    #[test]
    fn arz_conserves_mass(start in 1.0..3.0f64, len in 0.5..2.0f64, peak in 5.0..110.0f64) {
        let ap = ArzParams { law: LwrParams { v_f: 33.0, rho_c: 63.158, a_hat: 2.34 }, k_bar: 180.0 };
        let rho0 = bump(start, len, peak);
        let f0 = MacroField::sample(0.0, 10.0, 400, &rho0, |x| ap.law.speed(rho0(x))).unwrap();
        conserved(&f0, |f| arz_nt_step(f, &ap, 0.5 * arz_stable_dt(f, &ap)).unwrap())?;
    }
}
