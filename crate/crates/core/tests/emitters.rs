use approx::assert_abs_diff_eq;
use sps_core::emitters::*;
use sps_core::interference::P34Options;
use sps_core::presets::{Preset, SweepParameter};

fn point(name: &str, parameter: SweepParameter, value: f64) -> FigureOfMerit {
    let p = Preset::builtin(name).unwrap().normalized().unwrap();
    let spec = p.params.with_parameter(parameter, value).unwrap();
    let copts = p.calibration.as_ref().map(|c| (c.range, c.options(&p.tolerances)));
    evaluate_spec(&spec, copts.as_ref().map(|(r, o)| (*r, o)), &p.tolerances.p34_options()).unwrap()
}

#[test]
fn branching_angle_trades_efficiency_for_indistinguishability() {
    let a = point("fig9", SweepParameter::Theta, 0.0);
    let b = point("fig9", SweepParameter::Theta, std::f64::consts::FRAC_PI_2);
    assert!(a.collection_efficiency > b.collection_efficiency);
    assert!(a.indistinguishability < b.indistinguishability);
    assert!(a.collection_efficiency > 0.99);
    assert!(b.indistinguishability > 0.999);
}

#[test]
fn fig5_left_edge_is_locked() {
    let f = point("fig5", SweepParameter::GammaDeph, 0.0);
    assert_abs_diff_eq!(f.indistinguishability, 0.8729, epsilon = 5e-4);
    assert_abs_diff_eq!(f.collection_efficiency, 0.9, epsilon = 1e-12);
}

#[test]
fn saturated_raman_emission_follows_purcell_formula() {
    let f = point("fig7", SweepParameter::Purcell, 10.0);
    assert_abs_diff_eq!(f.emitted_photons, 20.0 / 21.0, epsilon = 0.01);
    assert_eq!(f.emitted_photons, f.collection_efficiency);
}

#[test]
fn incoherent_sweep_shows_the_trade_off() {
    let r = sweep(&Preset::builtin("fig4").unwrap()).unwrap();
    assert_eq!(r.parameter, "F_P");
    for w in r.records.windows(2) {
        assert!(w[1].fom.collection_efficiency > w[0].fom.collection_efficiency);
    }
    let first = &r.records[0].fom;
    let last = &r.records.last().unwrap().fom;
    assert!(last.indistinguishability < first.indistinguishability);
}

#[test]
fn dephasing_sweep_is_monotone() {
    let r = sweep(&Preset::builtin("fig10").unwrap()).unwrap();
    for w in r.records.windows(2) {
        assert!(w[1].fom.indistinguishability <= w[0].fom.indistinguishability + 1e-6);
    }
}

#[test]
fn sweep_errors_name_the_failing_point() {
    let mut p = Preset::builtin("fig7").unwrap();
    p.sweep.values = vec![10.0];
    p.calibration.as_mut().unwrap().range = (0.01, 0.02);
    let e = sweep(&p).unwrap_err();
    assert!(e.to_string().contains("F_P = 10"), "{e}");
}

#[test]
fn wider_pulses_need_less_peak_drive() {
    let narrow = point("fig8", SweepParameter::PulseWidth, 1.0);
    let wide = point("fig8", SweepParameter::PulseWidth, 5.0);
    assert!(wide.peak_rabi < narrow.peak_rabi);
}

#[test]
fn tolerances_are_honoured() {
    let mut opts = P34Options::default();
    opts.quad_tol = 1e-5;
    let p = Preset::builtin("fig9").unwrap().normalized().unwrap();
    let m = p.params.build().unwrap();
    let a = figure_of_merit(&m, &opts).unwrap();
    let b = figure_of_merit(&m, &P34Options::default()).unwrap();
    assert!((a.indistinguishability - b.indistinguishability).abs() < 2e-4);
}
