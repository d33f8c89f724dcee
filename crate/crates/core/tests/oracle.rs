use std::f64::consts::PI;

use num_complex::Complex64;
use sideband_ob::bloch::{settle, settle_from, extract_harmonics, SettleOptions};
use sideband_ob::compare::compare_point;
use sideband_ob::resonant::output_branches;
use sideband_ob::sideband::solve_triplet;
use sideband_ob::{Model, ModelParams};

fn bistable_model() -> Model {
    Model::new(ModelParams { r: 0.5, theta: PI, epsilon: 2.0, n_eff: 101.0, ..Default::default() }).unwrap()
}

#[test]
fn weak_field_triplet_matches_integration() {
    let m = bistable_model();
    let opts = SettleOptions::default();
    for (e0, tol0, tol1) in [(0.01, 1e-5, 1e-3), (0.05, 1e-4, 2e-2)] {
        let p = solve_triplet(Complex64::new(e0, 0.0), &m, 2).unwrap();
        let c = compare_point(&p, &m, &opts, 4).unwrap();
        assert!(c.rel_err[0] < tol0, "e0 {e0}: a0 {}", c.rel_err[0]);
        assert!(c.rel_err[1] < tol1, "e0 {e0}: a1 {}", c.rel_err[1]);
    }
}

#[test]
fn settled_central_field_reproduces_input() {
    let m = bistable_model();
    let p = solve_triplet(Complex64::new(0.2, 0.0), &m, 2).unwrap();
    let traj = settle_from(p.initial_state(&m), p.e_in, &m, &SettleOptions::default()).unwrap();
    let h = extract_harmonics(&traj, &m, 3).unwrap();
    assert!((h.e_in - p.e_in).norm() < 1e-9 * p.e_in.norm());
    assert!((h.a(0) - p.a0).norm() < 1e-2 * p.a0.norm());
}

#[test]
fn resonant_integration_lands_on_a_stable_branch() {
    let m = Model::new(ModelParams { r: 0.5, n_eff: 101.0, ..Default::default() }).unwrap();
    for amp in [2.0, 8.0, 30.0] {
        let e_in = Complex64::new(amp, 0.0);
        let traj = settle(e_in, &m, &SettleOptions::default()).unwrap();
        let s = traj.states[0];
        let e_t = traj.fields_total[0];
        let branches = output_branches(e_in, &m, 60.0).unwrap();
        let hit = branches
            .iter()
            .find(|b| (b.e_t - e_t).norm() < 1e-6 * (1.0 + e_t.norm()))
            .unwrap_or_else(|| panic!("no branch at {e_t} among {branches:?}"));
        assert!(hit.stable);
        assert!((hit.s0_eq - s.s0).abs() < 1e-7);
    }
}
