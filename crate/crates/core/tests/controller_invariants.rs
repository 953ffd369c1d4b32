//! Structural properties of the feedback laws at random admissible states:
//! decentralization, translation and mirror symmetry, and the F/δ closure.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trafficfluid::controllers::{control, prcc_q, ControlOutput, Family};
use trafficfluid::fleet::{elliptic_distance, validate_membership, Corridor, FleetConfig, FleetState, RoadSpec};
use trafficfluid::microsim::{preset_scenario, random_fleet, Scenario};
use trafficfluid::shapes::ScalarShape;

const N: usize = 8;

fn small(preset: &str) -> Scenario {
    let mut sc = preset_scenario(preset, 1).unwrap();
    let f = &sc.fleet;
    sc.fleet = FleetConfig::uniform(N, f.lengths[0], f.v_max, f.phi, f.p.get(0, 1), f.l.get(0, 1), f.lambda).unwrap();
    if sc.ctrl.family == Family::Gcc {
        sc.ctrl.v_star = vec![30.0];
        sc.road = RoadSpec::CorridorSet { corridors: vec![Corridor::constant(-7.2, 7.2).unwrap(); N] };
    }
    sc
}

fn random_state(sc: &Scenario, seed: u64) -> FleetState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut vehicles = random_fleet(&mut rng, &sc.fleet, 30.0 * N as f64, 5.0, (15.0, 33.25));
        for s in vehicles.iter_mut() {
            s.theta = rng.gen_range(-0.5 * sc.fleet.phi..0.5 * sc.fleet.phi);
        }
        let st = FleetState::new(0.0, vehicles);
        if validate_membership(&st, &sc.fleet, &sc.road).unwrap().is_empty() {
            return st;
        }
    }
}

fn out(sc: &Scenario, st: &FleetState) -> ControlOutput {
    control(st, &sc.fleet, &sc.ctrl, &sc.road).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

const PRESETS: [&str; 5] = ["ncc-viscous", "ncc-inviscid", "prcc-viscous", "prcc-inviscid", "gcc-offramp"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn far_vehicles_do_not_influence_each_other(seed in 0u64..10_000, which in 0usize..5, dv in -3.0..1.5f64) {
        let sc = small(PRESETS[which]);
        let st = random_state(&sc, seed);
        let base = out(&sc, &st);
        let (xi, yi) = (st.vehicles[0].x, st.vehicles[0].y);
        let lam = sc.fleet.lambda;
        let p = sc.fleet.p.get(0, 1);
        let far: Vec<usize> = (1..N).filter(|&j| elliptic_distance((xi, yi), (st.vehicles[j].x, st.vehicles[j].y), p) > lam).collect();
        prop_assume!(!far.is_empty());
        let mut moved = st.clone();
        let j = far[0];
        moved.vehicles[j].v += dv;
        moved.vehicles[j].theta *= -0.5;
        prop_assume!(validate_membership(&moved, &sc.fleet, &sc.road).unwrap().is_empty());
        let after = out(&sc, &moved);
        prop_assert_eq!(base.f[0].to_bits(), after.f[0].to_bits());
        prop_assert_eq!(base.delta[0].to_bits(), after.delta[0].to_bits());
    }

    #[test]
    fn common_shift_along_the_road_changes_nothing(seed in 0u64..10_000, which in 0usize..5, shift in -500.0..500.0f64) {
        let sc = small(PRESETS[which]);
        let st = random_state(&sc, seed);
        let mut shifted = st.clone();
        shifted.vehicles.iter_mut().for_each(|v| v.x += shift);
        let (a, b) = (out(&sc, &st), out(&sc, &shifted));
        for i in 0..N {
            prop_assert!(close(a.f[i], b.f[i], 1e-9), "F_{}: {} vs {}", i, a.f[i], b.f[i]);
            prop_assert!(close(a.delta[i], b.delta[i], 1e-9), "delta_{}: {} vs {}", i, a.delta[i], b.delta[i]);
        }
    }

    #[test]
    fn mirror_image_mirrors_the_steering(seed in 0u64..10_000, which in 0usize..4) {
        let sc = small(PRESETS[which]);
        let st = random_state(&sc, seed);
        let mut m = st.clone();
        m.vehicles.iter_mut().for_each(|v| { v.y = -v.y; v.theta = -v.theta; });
        let (a, b) = (out(&sc, &st), out(&sc, &m));
        for i in 0..N {
            prop_assert!(close(a.f[i], b.f[i], 1e-12));
            prop_assert!(close(a.delta[i], -b.delta[i], 1e-12));
        }
    }

    #[test]
    fn steering_is_consistent_with_the_returned_force(seed in 0u64..10_000, viscous in any::<bool>(), prcc in any::<bool>()) {
        let name = match (prcc, viscous) {
            (false, true) => "ncc-viscous",
            (false, false) => "ncc-inviscid",
            (true, true) => "prcc-viscous",
            (true, false) => "prcc-inviscid",
        };
        let sc = small(name);
        let st = random_state(&sc, seed);
        let o = out(&sc, &st);
        let c = &sc.ctrl;
        let cphi = sc.fleet.phi.cos();
        for (i, s) in st.vehicles.iter().enumerate() {
            let (cs, sn) = (s.theta.cos(), s.theta.sin());
            let du = c.boundary.eval(s.y).unwrap().1;
            let xi = o.get("Xi")[i];
            let tan_d = if prcc {
                let vm = sc.fleet.v_max;
                let beta = c.a_pen / (cs - cphi).powi(2) + vm * vm * ((c.b - 1.0) * s.v * cs + 30.0) / (vm - s.v);
                let a_t = c.b * vm.powi(3) * sn / (2.0 * (vm - s.v).powi(2) * s.v);
                prop_assert!(prcc_q(s.v, s.theta, 30.0, vm) > 0.0);
                sc.fleet.lengths[i] / beta * (o.get("G")[i] - du - a_t * o.f[i] - xi)
            } else {
                let den = 30.0 + c.a_pen / (s.v * (cs - cphi).powi(2)) + s.v * cs * (c.b - 1.0);
                sc.fleet.lengths[i] / s.v * (o.get("Z")[i] - du - xi - c.b * sn * o.f[i]) / den
            };
            prop_assert!(close(tan_d, o.delta[i].tan(), 1e-12), "vehicle {}: {} vs {}", i, tan_d, o.delta[i].tan());
        }
    }
}

#[test]
fn outputs_vanish_on_the_equilibrium_set() {
    for name in ["ncc-viscous", "prcc-viscous"] {
        let sc = small(name);
        // Single file on the centre line, spaced beyond the interaction range.
        let gap = sc.fleet.lambda + 1.0;
        let vehicles = (0..N).map(|i| trafficfluid::fleet::VehicleState::new(-(i as f64) * gap, 0.0, 0.0, 30.0)).collect();
        let o = out(&sc, &FleetState::new(0.0, vehicles));
        assert!(o.f.iter().chain(&o.delta).all(|x| x.abs() < 1e-12), "{name}: {o:?}");
    }
}
