//! Particle and finite-volume solutions of the macroscopic NCC model agree
//! better as the particle count grows.

use trafficfluid::macrolab::setups::WaveSetup;
use trafficfluid::macrolab::{integrate_particles, ncc_fv_run, particle_init, MacroModel};
use trafficfluid::microsim::IntegratorConfig;

const T: f64 = 0.1;

fn grid_solution(cells: usize) -> trafficfluid::macrolab::MacroField {
    let w = WaveSetup { cells, checkpoints: vec![0.0, T], ..Default::default() };
    let h = ncc_fv_run(w.initial().unwrap(), &w.params().unwrap(), &w.far_field(), T, T, w.cfl).unwrap();
    h.at(T).unwrap().clone()
}

/// sup over interior gaps of |particle density − reference(x)|.
fn sup_gap(reference: &dyn Fn(f64) -> f64, n: usize) -> f64 {
    let p = WaveSetup::default().params().unwrap();
    let e0 = particle_init(WaveSetup::rho0, WaveSetup::v0, n, (0.0, 1.0), 20_000, None).unwrap();
    let icfg = IntegratorConfig { t_end: T, sample_dt: T, h_init: 1e-5, h_max: 1e-3, tol_abs: 1e-10, tol_rel: 1e-10, ..Default::default() };
    let run = integrate_particles(&e0, &p, MacroModel::Ncc, &icfg).unwrap();
    let (t, e) = run.samples.last().unwrap();
    assert!((t - T).abs() < 1e-12);
    let dens = e.gap_densities();
    let k0 = n / 10;
    (k0..dens.len() - k0).map(|k| (dens[k] - reference(0.5 * (e.x[k] + e.x[k + 1]))).abs()).fold(0.0, f64::max)
}

#[test]
fn particle_density_approaches_the_grid_solution() {
    let coarse = grid_solution(6000);
    let fine = grid_solution(12_000);
    let direct: Vec<f64> = [200, 400, 800].iter().map(|&n| sup_gap(&|x| fine.rho_at(x), n)).collect();
    assert!(direct[0] > direct[1] && direct[1] > direct[2], "{direct:?}");

    // The grid error is first order, so extrapolating removes most of it.
    let on_coarse = sup_gap(&|x| coarse.rho_at(x), 800);
    let order = on_coarse / direct[2];
    assert!((1.8..2.2).contains(&order), "grid refinement ratio {order}");
    let extrapolated: Vec<f64> = [200, 400, 800].iter().map(|&n| sup_gap(&|x| 2.0 * fine.rho_at(x) - coarse.rho_at(x), n)).collect();
    eprintln!("direct {direct:?} extrapolated {extrapolated:?}");
    assert!(extrapolated[0] > extrapolated[1] && extrapolated[1] > extrapolated[2], "{extrapolated:?}");
    assert!(extrapolated[2] < 0.25 * direct[2], "{extrapolated:?} vs {direct:?}");
}
