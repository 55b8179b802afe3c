//! Human-readable run definitions: model parameters, the swept parameter and
//! how the drive is calibrated.

use serde::{Deserialize, Serialize};

use crate::emitters::CalibrationOptions;
use crate::error::{Result, SimError};
use crate::interference::P34Options;
use crate::model::{build_incoherent_model, build_raman_model, coupling_for_purcell, purcell_factor, EmitterModel};
use crate::operator::GaussianPulse;

/// Ratio between the full width at half maximum and the standard deviation.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Incoherent,
    Raman,
}

/// How a quoted pulse width maps onto the Gaussian envelope.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthConvention {
    /// Width is the standard deviation of `exp(−t²/2σ²)`.
    #[default]
    Sigma,
    /// Width is the full width at half maximum of the envelope.
    Fwhm,
}

fn one() -> f64 {
    1.0
}

/// Physical parameters of one emitter and its excitation pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    #[serde(default = "one")]
    pub gamma_spon: f64,
    /// Purcell factor. For the Raman emitter, either this or `g` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purcell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub gamma_relax: f64,
    #[serde(default)]
    pub gamma_deph: f64,
    pub pulse_width: f64,
    pub peak_rabi: f64,
    #[serde(default)]
    pub width_convention: WidthConvention,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Purcell,
    GammaDeph,
    PulseWidth,
    Theta,
    Kappa,
    Coupling,
    PeakRabi,
}

enum Dimension {
    None,
    Rate,
    Time,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Purcell => "F_P",
            SweepParameter::GammaDeph => "gamma_deph",
            SweepParameter::PulseWidth => "pulse_width",
            SweepParameter::Theta => "theta",
            SweepParameter::Kappa => "kappa",
            SweepParameter::Coupling => "g",
            SweepParameter::PeakRabi => "peak_rabi",
        }
    }

    /// Unit of the swept value after normalization.
    pub fn unit(&self) -> &'static str {
        match self.dimension() {
            Dimension::None => {
                if *self == SweepParameter::Theta {
                    "rad"
                } else {
                    ""
                }
            }
            Dimension::Rate => "Gamma_spon",
            Dimension::Time => "1/Gamma_spon",
        }
    }

    fn dimension(&self) -> Dimension {
        match self {
            SweepParameter::Purcell | SweepParameter::Theta => Dimension::None,
            SweepParameter::PulseWidth => Dimension::Time,
            _ => Dimension::Rate,
        }
    }
}

impl ModelSpec {
    pub fn pulse_sigma(&self) -> f64 {
        match self.width_convention {
            WidthConvention::Sigma => self.pulse_width,
            WidthConvention::Fwhm => self.pulse_width / FWHM_PER_SIGMA,
        }
    }

    pub fn purcell(&self) -> Result<f64> {
        match (self.model, self.purcell, self.g) {
            (ModelKind::Incoherent, p, _) => Ok(p.unwrap_or(0.0)),
            (ModelKind::Raman, Some(p), None) => Ok(p),
            (ModelKind::Raman, None, Some(g)) => purcell_factor(g, self.kappa, self.gamma_spon),
            _ => Err(SimError::param("Raman parameters need exactly one of `purcell` and `g`")),
        }
    }

    /// Cavity coupling `g` of the Raman emitter; zero for incoherent pumping.
    pub fn coupling(&self) -> Result<f64> {
        match (self.model, self.purcell, self.g) {
            (ModelKind::Incoherent, _, _) => Ok(0.0),
            (ModelKind::Raman, None, Some(g)) => Ok(g),
            (ModelKind::Raman, Some(p), None) => coupling_for_purcell(p, self.kappa, self.gamma_spon),
            _ => Err(SimError::param("Raman parameters need exactly one of `purcell` and `g`")),
        }
    }

    pub fn build(&self) -> Result<EmitterModel> {
        let pulse = GaussianPulse::starting_at_zero(self.peak_rabi, self.pulse_sigma())?;
        match self.model {
            ModelKind::Incoherent => {
                if self.g.is_some() || self.kappa != 0.0 || self.theta != 0.0 {
                    return Err(SimError::param("`g`, `kappa` and `theta` do not apply to incoherent pumping"));
                }
                build_incoherent_model(self.gamma_spon, self.purcell()?, self.gamma_relax, self.gamma_deph, pulse)
            }
            ModelKind::Raman => {
                if self.gamma_relax != 0.0 {
                    return Err(SimError::param("`gamma_relax` does not apply to the Raman emitter"));
                }
                build_raman_model(self.gamma_spon, self.coupling()?, self.kappa, self.theta, self.gamma_deph, pulse)
            }
        }
    }

    /// Copy with one parameter replaced. Sweeping κ keeps the Purcell factor.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<ModelSpec> {
        let mut s = self.clone();
        match parameter {
            SweepParameter::Purcell => {
                s.purcell = Some(value);
                if s.model == ModelKind::Raman {
                    s.g = None;
                }
            }
            SweepParameter::GammaDeph => s.gamma_deph = value,
            SweepParameter::PulseWidth => s.pulse_width = value,
            SweepParameter::Theta => s.theta = value,
            SweepParameter::Kappa => {
                let fp = self.purcell()?;
                s.kappa = value;
                s.purcell = Some(fp);
                s.g = None;
            }
            SweepParameter::Coupling => {
                s.g = Some(value);
                s.purcell = None;
            }
            SweepParameter::PeakRabi => s.peak_rabi = value,
        }
        Ok(s)
    }

    fn scaled(&self, rate_unit: f64) -> ModelSpec {
        let r = 1.0 / rate_unit;
        ModelSpec {
            gamma_spon: self.gamma_spon * r,
            g: self.g.map(|g| g * r),
            kappa: self.kappa * r,
            gamma_relax: self.gamma_relax * r,
            gamma_deph: self.gamma_deph * r,
            peak_rabi: self.peak_rabi * r,
            pulse_width: self.pulse_width * rate_unit,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    /// Peak Rabi search interval, in the preset's rate unit.
    pub range: (f64, f64),
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    CalibrationOptions::default().threshold
}

impl CalibrationSpec {
    pub fn options(&self, tol: &Tolerances) -> CalibrationOptions {
        CalibrationOptions {
            threshold: self.threshold,
            tol: tol.tol,
            ..CalibrationOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol: f64,
    pub quad_tol: f64,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let p = P34Options::default();
        Tolerances {
            tol: p.tol,
            quad_tol: p.quad_tol,
            residual: p.residual,
        }
    }
}

impl Tolerances {
    pub fn p34_options(&self) -> P34Options {
        P34Options {
            tol: self.tol,
            quad_tol: self.quad_tol,
            residual: self.residual,
            ..P34Options::default()
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("tol", self.tol), ("quad_tol", self.quad_tol), ("residual", self.residual)] {
            if !(v > 0.0 && v < 0.1) {
                return Err(SimError::param(format!("tolerance `{name}` must lie in (0, 0.1), got {v}")));
            }
        }
        Ok(())
    }
}

/// A complete sweep definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    #[serde(default)]
    pub comment: String,
    /// Rates in this file are divided by `rate_unit` and times multiplied by
    /// it, so `rate_unit = Γ_spon` yields the internal units.
    #[serde(default = "one")]
    pub rate_unit: f64,
    pub params: ModelSpec,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub calibration: Option<CalibrationSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Names of the shipped presets.
pub const BUILTIN_PRESETS: [&str; 7] = ["fig4", "fig5", "fig7", "fig7inset", "fig8", "fig9", "fig10"];

pub fn builtin_json(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig4" => include_str!("../presets/fig4.json"),
        "fig5" => include_str!("../presets/fig5.json"),
        "fig7" => include_str!("../presets/fig7.json"),
        "fig7inset" => include_str!("../presets/fig7inset.json"),
        "fig8" => include_str!("../presets/fig8.json"),
        "fig9" => include_str!("../presets/fig9.json"),
        "fig10" => include_str!("../presets/fig10.json"),
        "hbt" => include_str!("../presets/hbt.json"),
        "gate" => include_str!("../presets/gate.json"),
        _ => return None,
    })
}

impl Preset {
    pub fn builtin(name: &str) -> Result<Preset> {
        if !BUILTIN_PRESETS.contains(&name) {
            return Err(SimError::param(format!(
                "unknown preset `{name}`, expected one of {}",
                BUILTIN_PRESETS.join(", ")
            )));
        }
        Preset::from_json(builtin_json(name).unwrap())
    }

    pub fn from_json(text: &str) -> Result<Preset> {
        let p: Preset = serde_json::from_str(text).map_err(|e| SimError::param(format!("preset: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_unit > 0.0 && self.rate_unit.is_finite()) {
            return Err(SimError::param("rate_unit must be positive"));
        }
        if self.sweep.values.is_empty() {
            return Err(SimError::param("sweep has no values"));
        }
        if self.sweep.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::param("sweep values must be strictly increasing"));
        }
        if self.sweep.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SimError::param("sweep values must be finite and >= 0"));
        }
        if let Some(c) = &self.calibration {
            if !(c.threshold > 0.0 && c.threshold <= 1.0) {
                return Err(SimError::param("calibration threshold must lie in (0, 1]"));
            }
        }
        self.tolerances.validate()?;
        // parameter sanity, including exactly-one-of purcell/g
        self.params.scaled(self.rate_unit).build()?;
        Ok(())
    }

    /// The same preset expressed in internal units (`rate_unit = 1`).
    pub fn normalized(&self) -> Result<Preset> {
        self.validate()?;
        let u = self.rate_unit;
        let conv = |v: f64| match self.sweep.parameter.dimension() {
            Dimension::None => v,
            Dimension::Rate => v / u,
            Dimension::Time => v * u,
        };
        Ok(Preset {
            rate_unit: 1.0,
            params: self.params.scaled(u),
            sweep: SweepSpec {
                parameter: self.sweep.parameter,
                values: self.sweep.values.iter().map(|&v| conv(v)).collect(),
            },
            calibration: self.calibration.as_ref().map(|c| CalibrationSpec {
                range: (c.range.0 / u, c.range.1 / u),
                threshold: c.threshold,
            }),
            ..self.clone()
        })
    }
}

fn default_hbt_tol() -> f64 {
    P34Options::default().tol
}

/// Pulse-train coincidence run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbtConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub comment: String,
    pub params: ModelSpec,
    pub n_pulses: usize,
    /// Pulse repetition period.
    pub period: f64,
    pub tau_step: f64,
    pub t_points_per_period: usize,
    #[serde(default = "default_hbt_tol")]
    pub tol: f64,
}

impl HbtConfig {
    pub fn builtin() -> HbtConfig {
        serde_json::from_str(include_str!("../presets/hbt.json")).expect("bundled hbt preset parses")
    }

    pub fn from_json(text: &str) -> Result<HbtConfig> {
        let c: HbtConfig = serde_json::from_str(text).map_err(|e| SimError::param(format!("hbt config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses < 2 {
            return Err(SimError::param("n_pulses must be at least 2"));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(SimError::param("period must be positive"));
        }
        if !(self.tau_step > 0.0 && self.tau_step < self.period) {
            return Err(SimError::param("tau_step must lie in (0, period)"));
        }
        if self.t_points_per_period < 8 {
            return Err(SimError::param("t_points_per_period must be at least 8"));
        }
        if !(self.tol > 0.0 && self.tol < 1e-2) {
            return Err(SimError::param("tol must lie in (0, 1e-2)"));
        }
        self.params.build().map(|_| ())
    }

    /// Delays from 0 to the full train length in steps of `tau_step`.
    pub fn tau_grid(&self) -> Vec<f64> {
        let span = self.n_pulses as f64 * self.period;
        let n = (span / self.tau_step).floor() as usize;
        (0..=n).map(|k| k as f64 * self.tau_step).collect()
    }

    pub fn run(&self) -> Result<crate::interference::HbtTrace> {
        self.validate()?;
        let model = self.params.build()?;
        let opts = crate::interference::HbtOptions {
            period: self.period,
            t_points_per_period: self.t_points_per_period,
            tol: self.tol,
        };
        crate::interference::hbt_trace(&model, self.n_pulses, &self.tau_grid(), &opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses() {
        for name in BUILTIN_PRESETS {
            let p = Preset::builtin(name).unwrap();
            assert_eq!(p.name, name);
            let n = p.normalized().unwrap();
            assert_eq!(n.sweep.values.len(), p.sweep.values.len());
            for v in &n.sweep.values {
                n.params.with_parameter(n.sweep.parameter, *v).unwrap().build().unwrap();
            }
        }
    }

    #[test]
    fn si_preset_is_normalized() {
        let p = Preset::builtin("fig4").unwrap().normalized().unwrap();
        assert!((p.params.gamma_spon - 1.0).abs() < 1e-12);
        assert!((p.params.gamma_relax - 100.0).abs() < 1e-9);
        assert!((p.params.pulse_width - 0.01).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = Preset::builtin("fig9").map(|p| serde_json::to_string(&p).unwrap()).unwrap();
        let bad = text.replacen("\"name\"", "\"bogus\":1,\"name\"", 1);
        assert!(Preset::from_json(&bad).is_err());
    }

    #[test]
    fn kappa_sweep_keeps_purcell() {
        let p = Preset::builtin("fig7inset").unwrap();
        for k in [5.0, 10.0, 20.0] {
            let s = p.params.with_parameter(SweepParameter::Kappa, k).unwrap();
            assert!((s.purcell().unwrap() - 20.0).abs() < 1e-12);
            let g = s.coupling().unwrap();
            assert!((purcell_factor(g, k, 1.0).unwrap() - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fwhm_width_converts() {
        let mut s = Preset::builtin("fig9").unwrap().params;
        s.width_convention = WidthConvention::Fwhm;
        assert!((s.pulse_sigma() * FWHM_PER_SIGMA - s.pulse_width).abs() < 1e-15);
    }
}
