//! Figures of merit of the two single-photon sources, drive calibration and
//! parameter sweeps.

use serde::Serialize;

use crate::dynamics::{evolve, Trajectory};
use crate::error::{Result, SimError};
use crate::interference::{check_window, p34_from_trajectory, single_shot, P34Options};
use crate::model::{EmitterModel, ModelParams};
use crate::par;
use crate::presets::{ModelSpec, Preset};

/// `F_P / (F_P + 1)`: fraction of emission going into the cavity mode.
pub fn collection_efficiency_incoherent(purcell: f64) -> f64 {
    purcell / (purcell + 1.0)
}

/// Photons leaving the cavity, `2κ ∫⟨σ₂₂⟩ dt`.
pub fn emitted_photons_raman(model: &EmitterModel, trajectory: &Trajectory) -> Result<f64> {
    if !matches!(model.params, ModelParams::Raman { .. }) {
        return Err(SimError::param("emitted photon count applies to the Raman emitter"));
    }
    check_window(model, trajectory, 1e-4)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FigureOfMerit {
    pub indistinguishability: f64,
    pub collection_efficiency: f64,
    pub emitted_photons: f64,
    pub peak_rabi: f64,
}

/// Evaluates a model with its drive as given.
pub fn figure_of_merit(model: &EmitterModel, opts: &P34Options) -> Result<FigureOfMerit> {
    let traj = single_shot(model, opts)?;
    let report = p34_from_trajectory(model, &traj, opts)?;
    let emitted = check_window(model, &traj, opts.residual)?;
    let collection_efficiency = match model.params {
        ModelParams::Incoherent { purcell, .. } => collection_efficiency_incoherent(purcell),
        ModelParams::Raman { .. } => emitted,
    };
    Ok(FigureOfMerit {
        indistinguishability: report.indistinguishability,
        collection_efficiency,
        emitted_photons: emitted,
        peak_rabi: model.drive.pulse().map(|p| p.peak_rabi).unwrap_or(0.0),
    })
}

/// Largest relative change between the two top samples of a plateau.
const PLATEAU_FLATNESS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationOptions {
    /// Fraction of the plateau photon number that counts as saturated.
    pub threshold: f64,
    /// Relative tolerance on the returned peak Rabi frequency.
    pub rel_tol: f64,
    /// Coarse samples used to bracket the answer.
    pub samples: usize,
    pub tol: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            threshold: 0.9999,
            rel_tol: 1e-3,
            samples: 16,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub peak_rabi: f64,
    /// `(peak Rabi, figure)` samples that drove the decision.
    pub curve: Vec<(f64, f64)>,
}

fn photon_number(model: &EmitterModel, peak: f64, tol: f64) -> Result<f64> {
    let m = model.with_peak(peak);
    let traj = single_shot(&m, &P34Options { tol, ..P34Options::default() })?;
    Ok(m.emission_rate() * traj.integrated_population(m.emission_upper))
}

/// Population left in the transient levels when the pulse has passed.
fn post_pulse_excitation(model: &EmitterModel, peak: f64, tol: f64) -> Result<f64> {
    let m = model.with_peak(peak);
    let end = m.drive.end();
    let traj = evolve(&m, &m.initial_state(), end, tol)?;
    let rho = traj.final_state();
    Ok(m.transient_levels.iter().map(|&k| rho.get(k, k).re).sum())
}

/// Peak Rabi frequency that saturates (Raman) or best inverts (incoherent
/// pumping) the emitter, searched within `range`.
///
/// Inversion is taken at the first maximum of the post-pulse excitation, so
/// the range should start below the π-pulse amplitude.
pub fn calibrate_peak_rabi(model: &EmitterModel, range: (f64, f64), opts: &CalibrationOptions) -> Result<Calibration> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(SimError::param(format!("calibration range must satisfy 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    if model.drive.pulse().is_none() {
        return Err(SimError::param("calibration needs a pulsed model"));
    }
    if hi - lo <= opts.rel_tol * hi {
        return Ok(Calibration {
            peak_rabi: lo,
            curve: Vec::new(),
        });
    }
    match model.params {
        ModelParams::Raman { .. } => calibrate_saturation(model, lo, hi, opts),
        ModelParams::Incoherent { .. } => calibrate_inversion(model, lo, hi, opts),
    }
}

fn calibrate_saturation(model: &EmitterModel, lo: f64, hi: f64, opts: &CalibrationOptions) -> Result<Calibration> {
    let n = opts.samples.max(4);
    let peaks: Vec<f64> = (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect();
    let values = par::try_map(&peaks, |&p| photon_number(model, p, opts.tol))?;
    let mut curve: Vec<(f64, f64)> = peaks.iter().copied().zip(values.iter().copied()).collect();
    // short pulses drive Rabi-like oscillations of n, so the plateau is the
    // largest value seen; it only has to stop rising at the top of the range
    let plateau = values.iter().copied().fold(0.0, f64::max);
    let fail = |message: String, curve: Vec<(f64, f64)>| Err(SimError::Calibration { message, curve });
    if plateau <= 0.0 {
        return fail("no photons emitted anywhere in the range".into(), curve);
    }
    if values[n - 1] - values[n - 2] > PLATEAU_FLATNESS * plateau {
        return fail(
            format!("photon number still rising at the top of the range ({:.4} -> {:.4})", values[n - 2], values[n - 1]),
            curve,
        );
    }
    let target = opts.threshold * plateau;
    let first = values.iter().position(|&v| v >= target).unwrap();
    if first == 0 {
        return Ok(Calibration { peak_rabi: lo, curve });
    }
    let (mut a, mut b) = (peaks[first - 1], peaks[first]);
    while b - a > opts.rel_tol * b {
        let mid = 0.5 * (a + b);
        let v = photon_number(model, mid, opts.tol)?;
        curve.push((mid, v));
        if v >= target {
            b = mid;
        } else {
            a = mid;
        }
    }
    curve.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(Calibration { peak_rabi: b, curve })
}

fn calibrate_inversion(model: &EmitterModel, lo: f64, hi: f64, opts: &CalibrationOptions) -> Result<Calibration> {
    let n = opts.samples.max(4);
    let peaks: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values = par::try_map(&peaks, |&p| post_pulse_excitation(model, p, opts.tol))?;
    let mut curve: Vec<(f64, f64)> = peaks.iter().copied().zip(values.iter().copied()).collect();
    // first local maximum: the π-pulse lobe rather than a later Rabi revival
    let best = (1..n - 1).find(|&i| values[i] >= values[i - 1] && values[i] > values[i + 1]);
    let Some(best) = best else {
        return Err(SimError::Calibration {
            message: format!("no excitation maximum inside [{lo}, {hi}]"),
            curve,
        });
    };
    // golden-section search on the bracketing interval
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (peaks[best - 1], peaks[best + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = post_pulse_excitation(model, c, opts.tol)?;
    let mut fd = post_pulse_excitation(model, d, opts.tol)?;
    curve.push((c, fc));
    curve.push((d, fd));
    while b - a > opts.rel_tol * 0.5 * (a + b) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = post_pulse_excitation(model, c, opts.tol)?;
            curve.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = post_pulse_excitation(model, d, opts.tol)?;
            curve.push((d, fd));
        }
    }
    curve.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(Calibration {
        peak_rabi: 0.5 * (a + b),
        curve,
    })
}

/// One evaluated point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    /// Swept parameter value in internal units.
    pub value: f64,
    pub purcell: f64,
    /// Cavity coupling of the Raman emitter, zero otherwise.
    pub g: f64,
    pub fom: FigureOfMerit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub preset: String,
    pub parameter: String,
    pub records: Vec<SweepRecord>,
}

/// Evaluates one model specification, calibrating the drive if requested.
pub fn evaluate_spec(
    spec: &ModelSpec,
    calibration: Option<((f64, f64), &CalibrationOptions)>,
    opts: &P34Options,
) -> Result<FigureOfMerit> {
    let mut model = spec.build()?;
    if let Some((range, copts)) = calibration {
        let cal = calibrate_peak_rabi(&model, range, copts)?;
        model = model.with_peak(cal.peak_rabi);
    }
    figure_of_merit(&model, opts)
}

/// Runs every point of a preset's sweep.
pub fn sweep(preset: &Preset) -> Result<SweepResult> {
    let spec = preset.normalized()?;
    let values = spec.sweep.values.clone();
    let param = spec.sweep.parameter;
    let records = par::try_map(&values, |&v| -> Result<SweepRecord> {
        let point = spec.params.with_parameter(param, v)?;
        let copts = spec.calibration.as_ref().map(|c| c.options(&spec.tolerances));
        let cal = match (&spec.calibration, &copts) {
            (Some(c), Some(o)) => Some((c.range, o)),
            _ => None,
        };
        let fom = evaluate_spec(&point, cal, &spec.tolerances.p34_options())
            .map_err(|e| e.context(format!("{} = {v}", param.name())))?;
        Ok(SweepRecord {
            value: v,
            purcell: point.purcell()?,
            g: point.coupling()?,
            fom,
        })
    })?;
    Ok(SweepResult {
        preset: preset.name.clone(),
        parameter: param.name().to_string(),
        records,
    })
}
