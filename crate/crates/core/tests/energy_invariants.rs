//! Energy functions are non-negative sums of their parts, and short closed-loop
//! runs stay admissible while the controller's energy does not grow.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trafficfluid::controllers::{LaneConfig, LaneState};
use trafficfluid::energy::{eval_h, eval_hbar, eval_hr, eval_htilde, EnergyReport};
use trafficfluid::fleet::{validate_membership, Corridor, FleetConfig, FleetState, RoadSpec};
use trafficfluid::harness::micro_stats;
use trafficfluid::microsim::{integrate, preset_scenario, random_fleet, Scenario};
use trafficfluid::shapes::{SaturationEll, VehiclePotential};

fn random_state(sc: &Scenario, seed: u64, n: usize) -> FleetState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut vehicles = random_fleet(&mut rng, &sc.fleet, 20.0 * n as f64, 6.5, (0.5, 34.5));
        for s in vehicles.iter_mut() {
            s.theta = rng.gen_range(-0.95 * sc.fleet.phi..0.95 * sc.fleet.phi);
        }
        let st = FleetState::new(0.0, vehicles);
        if validate_membership(&st, &sc.fleet, &sc.road).unwrap().is_empty() {
            return st;
        }
    }
}

fn sized(preset: &str, n: usize) -> Scenario {
    let mut sc = preset_scenario(preset, 1).unwrap();
    let f = &sc.fleet;
    sc.fleet = FleetConfig::uniform(n, f.lengths[0], f.v_max, f.phi, f.p.get(0, 1), f.l.get(0, 1), f.lambda).unwrap();
    if preset.starts_with("gcc") {
        sc.ctrl.v_star = vec![30.0];
        sc.road = RoadSpec::CorridorSet { corridors: vec![Corridor::constant(-7.2, 7.2).unwrap(); n] };
    }
    sc
}

fn well_formed(r: &EnergyReport) -> bool {
    let sum: f64 = r.parts.values().sum();
    r.value >= 0.0 && r.parts.values().all(|p| *p >= 0.0) && (sum - r.value).abs() <= 1e-12 * (1.0 + r.value)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fleet_energies_are_nonnegative(seed in 0u64..100_000, n in 1usize..10) {
        let sc = sized("ncc-viscous", n);
        let st = random_state(&sc, seed, n);
        prop_assert!(well_formed(&eval_h(&st, &sc.fleet, &sc.ctrl).unwrap()));
        let sc = sized("prcc-viscous", n);
        prop_assert!(well_formed(&eval_hr(&st, &sc.fleet, &sc.ctrl).unwrap()));
        let sc = sized("gcc-offramp", n);
        prop_assume!(validate_membership(&st, &sc.fleet, &sc.road).unwrap().is_empty());
        prop_assert!(well_formed(&eval_hbar(&st, &sc.fleet, &sc.ctrl, &sc.road).unwrap()));
    }

    #[test]
    fn lane_energy_is_nonnegative(
        s in prop::collection::vec(5.6..60.0f64, 1..6),
        v in prop::collection::vec(0.5..34.5f64, 6),
    ) {
        let cfg = LaneConfig {
            v_star: 30.0,
            v_max: 35.0,
            gamma: 0.1,
            potential: VehiclePotential::rational_cubic(1e-4, 5.59, 25.0),
            ell: SaturationEll::hinge(0.2),
        };
        let st = LaneState { v: v[..s.len() + 1].to_vec(), s };
        prop_assert!(well_formed(&eval_htilde(&st, &cfg).unwrap()));
    }
}

#[test]
fn short_runs_stay_admissible_and_dissipate() {
    for preset in ["ncc-viscous", "ncc-inviscid", "prcc-viscous", "prcc-inviscid"] {
        for seed in [11, 12] {
            let mut sc = preset_scenario(preset, seed).unwrap();
            sc.icfg.t_end = 15.0;
            let tr = integrate(&sc.w0, &sc.fleet, &sc.ctrl, &sc.road, &sc.icfg).unwrap();
            let st = micro_stats(&sc, &tr).unwrap();
            assert_eq!(st.violations, 0, "{preset}/{seed}: {:?}", st.first_violation);
            assert!(st.min_clearance_m > 0.0, "{preset}/{seed}");
            assert!(st.energy_rise <= 1e-6, "{preset}/{seed}: rise {}", st.energy_rise);

            // Controls stay bounded and the late window is no worse than the early one.
            let k = tr.samples.len() / 3;
            let peak = |w: &[trafficfluid::microsim::Sample]| {
                w.iter().flat_map(|s| s.control.f.iter().map(|f| f.abs())).fold(0.0, f64::max)
            };
            let (early, late) = (peak(&tr.samples[..k]), peak(&tr.samples[2 * k..]));
            assert!(early.is_finite() && late <= early, "{preset}/{seed}: {early} then {late}");
        }
    }
}
