use approx::assert_abs_diff_eq;
use sps_core::dynamics::*;
use sps_core::interference::*;
use sps_core::model::{build_incoherent_model, incoherent, EmitterModel};
use sps_core::operator::{Drive, GaussianPulse, C64};
use sps_core::presets::HbtConfig;

/// Weakly driven dot with fast relaxation: a two-level emitter whose
/// coherence decays at `γ = 1/2 + γ_deph`.
fn cw_model(gamma: f64) -> EmitterModel {
    build_incoherent_model(1.0, 0.0, 100.0, gamma - 0.5, Drive::Constant(0.01)).unwrap()
}

/// Two-level emitter prepared in the upper level, with an empty pulse.
fn excited_emitter(gamma_deph: f64) -> EmitterModel {
    let pulse = GaussianPulse::starting_at_zero(0.0, 0.01).unwrap();
    let m = build_incoherent_model(1.0, 0.0, 0.0, gamma_deph, pulse).unwrap();
    EmitterModel {
        initial_level: incoherent::E,
        ..m
    }
}

#[test]
fn cw_coincidences_follow_the_analytic_form() {
    let tau: Vec<f64> = (0..=100).map(|k| 0.05 * k as f64).collect();
    for gamma in [0.5, 1.0, 2.0] {
        let sim = cw_g2_simulated(&cw_model(gamma), &tau).unwrap();
        for (t, s) in tau.iter().zip(&sim) {
            assert_abs_diff_eq!(*s, cw_g2(gamma, *t), epsilon = 1e-5);
        }
    }
}

#[test]
fn cw_needs_constant_drive() {
    assert!(cw_g2_simulated(&excited_emitter(0.0), &[0.0, 1.0]).is_err());
}

#[test]
fn coherent_decay_gives_an_empty_coincidence_surface() {
    let m = excited_emitter(0.0);
    let traj = evolve(&m, &m.initial_state(), 15.0, 1e-10).unwrap();
    let grid: Vec<f64> = (0..20).map(|k| 0.25 * k as f64).collect();
    let s = coincidence_surface(&m, &traj, &grid, &grid).unwrap();
    assert_eq!(s.kind, SurfaceKind::G2Surface);
    assert!(s.values.iter().all(|v| v.norm() < 1e-8));
}

#[test]
fn vanishing_coherence_gives_half_the_population_product() {
    let m = excited_emitter(0.0);
    let traj = evolve(&m, &m.initial_state(), 4.0, 1e-9).unwrap();
    let grid = [0.0, 0.5, 1.0];
    let pp = population_product_surface(&m, &traj, &grid, &grid);
    let g1 = CorrelationSurface {
        values: vec![C64::new(0.0, 0.0); 9],
        kind: SurfaceKind::FirstOrder,
        ..pp.clone()
    };
    let s = g2_34_surface(&pp, &g1).unwrap();
    for (a, b) in s.values.iter().zip(&pp.values) {
        assert_abs_diff_eq!(a.re, 0.5 * b.re, epsilon = 1e-15);
    }
    let full = g2_34_surface(&pp, &CorrelationSurface {
        values: pp.values.iter().map(|v| C64::new(v.re.sqrt(), 0.0)).collect(),
        ..g1.clone()
    })
    .unwrap();
    assert!(full.values.iter().all(|v| v.norm() < 1e-15));
    let other = CorrelationSurface {
        tau_grid: vec![0.0, 0.5, 2.0],
        ..g1
    };
    assert!(g2_34_surface(&pp, &other).is_err());
}

#[test]
fn excited_two_level_photons_are_indistinguishable() {
    let r = p34(&excited_emitter(0.0)).unwrap();
    assert!(r.p34.abs() < 1e-4, "p34 = {}", r.p34);
    assert!(r.denominator_integral > 0.0);
}

#[test]
fn dephased_two_level_matches_lifetime_limit() {
    // indistinguishability Γ / (Γ + 2γ_deph)
    for gd in [0.25, 1.0] {
        let r = p34(&excited_emitter(gd)).unwrap();
        assert_abs_diff_eq!(r.indistinguishability, 1.0 / (1.0 + 2.0 * gd), epsilon = 2e-4);
    }
}

#[test]
fn unexcited_emitter_is_degenerate() {
    let pulse = GaussianPulse::starting_at_zero(0.0, 0.05).unwrap();
    let m = build_incoherent_model(1.0, 0.0, 100.0, 1.0, pulse).unwrap();
    assert!(matches!(p34(&m), Err(sps_core::SimError::Degenerate(_))));
}

#[test]
fn p34_requires_a_single_pulse() {
    let m = build_incoherent_model(1.0, 0.0, 100.0, 1.0, Drive::Off).unwrap();
    assert!(p34(&m).unwrap_err().is_parameter_error());
}

#[test]
fn hbt_peaks_reproduce_single_pulse_p34() {
    let cfg = HbtConfig::builtin();
    let trace = cfg.run().unwrap();
    let single = p34(&cfg.params.build().unwrap()).unwrap().p34;
    let sides: Vec<f64> = (1..cfg.n_pulses).map(|m| trace.peak_area(m) / (cfg.n_pulses - m) as f64).collect();
    let mean = sides.iter().sum::<f64>() / sides.len() as f64;
    for s in &sides {
        assert!((s / mean - 1.0).abs() < 0.01);
    }
    assert!((trace.p34_estimate(1) / single - 1.0).abs() < 0.02);
    assert!(trace.peak_area(0) > 0.0);
}

#[test]
fn unexcited_train_gives_a_flat_trace() {
    let mut cfg = HbtConfig::builtin();
    cfg.params.peak_rabi = 0.0;
    cfg.n_pulses = 2;
    cfg.t_points_per_period = 50;
    let trace = cfg.run().unwrap();
    assert!(trace.values.iter().all(|v| *v == 0.0));
}

#[test]
fn hbt_rejects_non_recycling_emitters() {
    let pulse = GaussianPulse::starting_at_zero(6.2, 1.0).unwrap();
    let m = sps_core::model::build_raman_model(1.0, 10.0, 10.0, 0.7, 0.0, pulse).unwrap();
    let opts = HbtOptions { period: 30.0, t_points_per_period: 50, tol: 1e-8 };
    assert!(hbt_trace(&m, 3, &[0.0, 1.0], &opts).is_err());
}

#[test]
fn steady_state_rejects_pulses() {
    let m = excited_emitter(0.0);
    assert!(steady_state(&m).is_err());
}
