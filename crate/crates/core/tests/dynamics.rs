use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use sps_core::dynamics::*;
use sps_core::model::{build_incoherent_model, build_raman_model, incoherent, raman, EmitterModel};
use sps_core::operator::{Drive, GaussianPulse, Operator, C64};

use sps_core::validation::raman_reference_correlator;

fn free_decay(gamma_deph: f64) -> EmitterModel {
    build_incoherent_model(1.0, 0.0, 0.0, gamma_deph, Drive::Off).unwrap()
}

fn fig9_model() -> EmitterModel {
    let pulse = GaussianPulse::starting_at_zero(6.2, 1.0).unwrap();
    build_raman_model(1.0, 10.0, 10.0, std::f64::consts::FRAC_PI_4, 0.0, pulse).unwrap()
}

fn fig2_model() -> EmitterModel {
    let pulse = GaussianPulse::starting_at_zero(35.0, 0.05).unwrap();
    build_incoherent_model(1.0, 0.0, 100.0, 1.0, pulse).unwrap()
}

fn superposition(dim: usize, a: usize, b: usize) -> Operator {
    let h = C64::new(0.5, 0.0);
    let mut rho = Operator::zeros(dim);
    for i in [a, b] {
        for j in [a, b] {
            rho.set(i, j, h);
        }
    }
    rho
}

#[test]
fn free_decay_is_exponential() {
    let m = free_decay(0.0);
    let rho0 = Operator::basis_state(3, incoherent::E);
    let traj = evolve(&m, &rho0, 5.0, DEFAULT_TOL).unwrap();
    assert_abs_diff_eq!(traj.population(incoherent::E, 5.0), (-5.0f64).exp(), epsilon = 1e-7);
    assert_abs_diff_eq!(traj.population(incoherent::E, 1.3), (-1.3f64).exp(), epsilon = 1e-7);
    assert!(traj.max_trace_drift() <= 10.0 * DEFAULT_TOL);
}

#[test]
fn rabi_oscillation_matches_closed_form() {
    let omega = 1.7;
    let m = build_incoherent_model(1.0, 0.0, 0.0, 0.0, Drive::Constant(omega)).unwrap();
    // no decay acts on the g-p pair
    let m = EmitterModel {
        dissipators: vec![],
        ..m
    };
    let rho0 = Operator::basis_state(3, incoherent::G);
    let period = std::f64::consts::PI / omega;
    let traj = evolve(&m, &rho0, 3.0 * period, DEFAULT_TOL).unwrap();
    for k in 0..=60 {
        let t = k as f64 * 3.0 * period / 60.0;
        assert_abs_diff_eq!(traj.population(incoherent::P, t), (omega * t).sin().powi(2), epsilon = 1e-7);
    }
    assert_abs_diff_eq!(traj.population(incoherent::G, period), 1.0, epsilon = 1e-7);
}

#[test]
fn coherence_decays_at_half_the_decay_rate_plus_dephasing() {
    for gd in [0.0, 0.3, 1.5] {
        let m = free_decay(gd);
        let rho0 = superposition(3, incoherent::G, incoherent::E);
        let traj = evolve(&m, &rho0, 3.0, DEFAULT_TOL).unwrap();
        for t in [0.5, 1.0, 2.5] {
            let c = traj.state_at(t).get(incoherent::E, incoherent::G).norm();
            assert_abs_diff_eq!(c, 0.5 * (-(0.5 + gd) * t).exp(), epsilon = 1e-7);
        }
    }
    // Raman: level 3 decays at Γ into two channels and dephases at γ
    for gd in [0.0, 0.7] {
        let m = build_raman_model(1.0, 0.0, 10.0, 0.4, gd, Drive::Off).unwrap();
        let rho0 = superposition(4, raman::L1, raman::L3);
        let traj = evolve(&m, &rho0, 2.0, DEFAULT_TOL).unwrap();
        let c = traj.state_at(2.0).get(raman::L3, raman::L1).norm();
        assert_abs_diff_eq!(c, 0.5 * (-(0.5 + gd) * 2.0f64).exp(), epsilon = 1e-7);
    }
}

#[test]
fn first_order_correlator_decays_at_coherence_rate() {
    for gd in [0.0, 0.5, 1.5] {
        let m = free_decay(gd);
        let rho0 = Operator::basis_state(3, incoherent::E);
        let traj = evolve(&m, &rho0, 6.0, DEFAULT_TOL).unwrap();
        let tau: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
        let s = first_order_surface(&m, &traj, &[0.2, 1.0], &tau).unwrap();
        assert_eq!(s.kind, SurfaceKind::FirstOrder);
        for i in 0..2 {
            let g0 = s.value(i, 0);
            for (k, t) in tau.iter().enumerate() {
                let r = (s.value(i, k) / g0).norm();
                assert_abs_diff_eq!(r, (-(0.5 + gd) * t).exp(), epsilon = 1e-6);
            }
        }
    }
}

#[test]
fn zero_delay_column_is_the_population() {
    for m in [fig2_model(), fig9_model()] {
        let traj = evolve_single_shot(&m, DEFAULT_TOL, 1e-7).unwrap();
        let t_grid: Vec<f64> = (1..40).map(|k| k as f64 * traj.t_end() / 80.0).collect();
        let s = first_order_surface(&m, &traj, &t_grid, &[0.0, 0.1]).unwrap();
        for (i, &t) in t_grid.iter().enumerate() {
            let p = traj.population(m.emission_upper, t);
            assert!((s.value(i, 0) - C64::new(p, 0.0)).norm() < 1e-9);
        }
    }
}

#[test]
fn raman_regression_matches_hand_coded_system() {
    for gd in [0.0, 1.5] {
        let m = build_raman_model(
            1.0,
            10.0,
            10.0,
            std::f64::consts::FRAC_PI_4,
            gd,
            GaussianPulse::starting_at_zero(6.2, 1.0).unwrap(),
        )
        .unwrap();
        let traj = evolve(&m, &m.initial_state(), 20.0, 1e-10).unwrap();
        let t_grid = [2.0, 4.5, 6.0, 7.3, 9.0];
        let tau: Vec<f64> = (0..=50).map(|k| 0.2 * k as f64).collect();
        let s = first_order_surface(&m, &traj, &t_grid, &tau).unwrap();
        for (i, &t) in t_grid.iter().enumerate() {
            let oracle = raman_reference_correlator(&m, &traj, t, &tau).unwrap();
            for (k, o) in oracle.iter().enumerate() {
                assert!((s.value(i, k) - o).norm() < 1e-6, "t = {t}, tau = {}", tau[k]);
            }
        }
    }
}

#[test]
fn cauchy_schwarz_bound_holds() {
    for m in [fig2_model(), fig9_model()] {
        let traj = evolve_single_shot(&m, DEFAULT_TOL, 1e-7).unwrap();
        let t_end = traj.t_end();
        let t_grid: Vec<f64> = (0..30).map(|k| k as f64 * t_end / 60.0).collect();
        let tau: Vec<f64> = (0..30).map(|k| k as f64 * t_end / 60.0).collect();
        let g1 = first_order_surface(&m, &traj, &t_grid, &tau).unwrap();
        let pp = population_product_surface(&m, &traj, &t_grid, &tau);
        for (a, b) in g1.values.iter().zip(&pp.values) {
            assert!(a.norm_sqr() <= b.re + 1e-8);
        }
    }
}

#[test]
fn halving_the_tolerance_changes_little() {
    let m = fig9_model();
    let coarse = evolve(&m, &m.initial_state(), 15.0, 1e-7).unwrap();
    let fine = evolve(&m, &m.initial_state(), 15.0, 5e-8).unwrap();
    for k in 0..=30 {
        let t = 0.5 * k as f64;
        for level in 0..4 {
            assert!((coarse.population(level, t) - fine.population(level, t)).abs() < 1e-7);
        }
    }
}

#[test]
fn states_stay_physical() {
    let m = fig2_model();
    let traj = evolve_single_shot(&m, DEFAULT_TOL, 1e-7).unwrap();
    for t in traj.time_grid() {
        traj.state_at(t).validate_density().unwrap();
    }
    assert!(traj.max_trace_drift() <= 10.0 * DEFAULT_TOL);
}

#[test]
fn surfaces_do_not_depend_on_worker_count() {
    let m = fig9_model();
    let traj = evolve(&m, &m.initial_state(), 16.0, DEFAULT_TOL).unwrap();
    let t_grid: Vec<f64> = (0..24).map(|k| 0.3 * k as f64).collect();
    let tau: Vec<f64> = (0..20).map(|k| 0.4 * k as f64).collect();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| first_order_surface(&m, &traj, &t_grid, &tau).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn steady_state_is_a_fixed_point() {
    let m = build_incoherent_model(1.0, 2.0, 50.0, 0.3, Drive::Constant(0.8)).unwrap();
    let rho = steady_state(&m).unwrap();
    rho.validate_density().unwrap();
    assert!(m.lindblad_rhs(0.0, &rho).max_abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn free_decay_from_any_diagonal_state(pe in 0.0f64..1.0, t in 0.1f64..4.0) {
        let m = free_decay(0.0);
        let mut rho0 = Operator::zeros(3);
        rho0.set(incoherent::E, incoherent::E, C64::new(pe, 0.0));
        rho0.set(incoherent::G, incoherent::G, C64::new(1.0 - pe, 0.0));
        let traj = evolve(&m, &rho0, t, DEFAULT_TOL).unwrap();
        prop_assert!((traj.population(incoherent::E, t) - pe * (-t).exp()).abs() < 1e-7);
    }
}
