//! Subcommand implementations. Each returns the tables it wrote so tests can inspect them.

use std::path::{Path, PathBuf};

use serde_json::Value;
use sps_core::emitters::{sweep, SweepResult};
use sps_core::gate::{fidelity_crossing, fit_rational, min_fidelity_curve, GateConfig};
use sps_core::presets::{HbtConfig, ModelKind, Preset, SweepParameter};
use sps_core::validation::oracle_suite;
use sps_core::SimError;

use crate::config::{ConfigError, RunConfig};
use crate::table::{format_sig, CsvTable};

/// Why a run stopped; maps onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_parameter_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(format!("cannot write {}: {e}", path.display()))
}

fn decode<T: serde::de::DeserializeOwned>(value: Value, what: &str) -> Result<T, Failure> {
    serde_json::from_value(value).map_err(|e| Failure::Config(format!("{what}: {e}")))
}

fn write_table(table: &CsvTable, dir: &Path, name: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let path = dir.join(format!("{name}.csv"));
    table.write_file(&path).map_err(|e| io_failure(&path, e))?;
    Ok(path)
}

fn with_unit(name: &str, unit: &str) -> String {
    if unit.is_empty() {
        name.to_string()
    } else {
        format!("{name} [{unit}]")
    }
}

/// Units of the preset file: internal units when `rate_unit = 1`, seconds otherwise.
fn file_unit(internal: &str, rate_unit: f64) -> &str {
    match (internal, rate_unit == 1.0) {
        ("Gamma_spon", false) => "s^-1",
        ("1/Gamma_spon", false) => "s",
        (u, _) => u,
    }
}

pub fn resolve_preset(cfg: &RunConfig, name: Option<&str>) -> Result<Preset, Failure> {
    let mut cfg = cfg.clone();
    if let Some(n) = name {
        cfg.preset = Some(n.to_string());
    }
    if cfg.preset.is_none() && cfg.body.as_object().is_none_or(|m| m.is_empty()) {
        return Err(Failure::Config("no preset given and the config defines no model".into()));
    }
    let preset: Preset = decode(cfg.resolved(None)?, "preset")?;
    preset.validate()?;
    Ok(preset)
}

/// The sweep as a table in the units of the preset file.
pub fn sweep_table(preset: &Preset, result: &SweepResult) -> CsvTable {
    let param = preset.sweep.parameter;
    let u = preset.rate_unit;
    let rate = file_unit("Gamma_spon", u);
    let raman = preset.params.model == ModelKind::Raman;
    let mut header = vec![with_unit(param.name(), file_unit(param.unit(), u))];
    header.extend(["indistinguishability", "collection_efficiency", "emitted_photons"].map(String::from));
    if param != SweepParameter::PeakRabi {
        header.push(with_unit("peak_rabi", rate));
    }
    if param != SweepParameter::Purcell {
        header.push("F_P".into());
    }
    if raman && param != SweepParameter::Coupling {
        header.push(with_unit("g", rate));
    }
    let mut table = CsvTable::new(header);
    for (value, r) in preset.sweep.values.iter().zip(&result.records) {
        let mut row = vec![
            *value,
            r.fom.indistinguishability,
            r.fom.collection_efficiency,
            r.fom.emitted_photons,
        ];
        if param != SweepParameter::PeakRabi {
            row.push(r.fom.peak_rabi * u);
        }
        if param != SweepParameter::Purcell {
            row.push(r.purcell);
        }
        if raman && param != SweepParameter::Coupling {
            row.push(r.g * u);
        }
        table.push(row);
    }
    table
}

pub fn figure(cfg: &RunConfig, name: Option<&str>, out: &Path) -> Result<CsvTable, Failure> {
    let preset = resolve_preset(cfg, name)?;
    let result = sweep(&preset)?;
    let table = sweep_table(&preset, &result);
    let path = write_table(&table, out, &preset.name)?;
    println!("{}: {} points -> {}", preset.name, table.rows.len(), path.display());
    Ok(table)
}

pub fn gate(cfg: &RunConfig, out: &Path) -> Result<CsvTable, Failure> {
    let gc: GateConfig = decode(cfg.resolved(Some("gate"))?, "gate config")?;
    gc.validate()?;
    let inputs = gc.inputs();
    let curve = min_fidelity_curve(&gc.epsilon0_over_tau, &inputs, gc.quadrature_nodes)?;
    let mut table = CsvTable::new(
        ["epsilon0_over_tau", "min_fidelity", "visibility", "worst_input"].map(String::from).to_vec(),
    );
    for p in &curve {
        table.push(vec![p.epsilon0_over_tau, p.min_fidelity, p.visibility, p.worst_input as f64]);
    }
    let name = gc.name.as_deref().unwrap_or("gate");
    let path = write_table(&table, out, name)?;
    println!("{name}: {} points over {} inputs -> {}", curve.len(), inputs.len(), path.display());
    let upper = gc.epsilon0_over_tau.iter().copied().fold(0.0, f64::max);
    if upper > 0.0 {
        match fidelity_crossing(0.99, &inputs, gc.quadrature_nodes, upper)? {
            Some(x) => println!("min fidelity reaches 0.99 at epsilon0/tau = {}", format_sig(x)),
            None => println!("min fidelity stays above 0.99 up to epsilon0/tau = {}", format_sig(upper)),
        }
    }
    if curve.len() >= 6 {
        let v: Vec<f64> = curve.iter().map(|p| p.visibility).collect();
        let f: Vec<f64> = curve.iter().map(|p| p.min_fidelity).collect();
        let fit = fit_rational(&v, &f)?;
        let fmt = |c: &[f64; 3]| c.map(format_sig).join(", ");
        println!(
            "rational fit in visibility: numerator [{}], denominator [{}], max residual {}",
            fmt(&fit.numerator),
            fmt(&fit.denominator),
            format_sig(fit.max_residual)
        );
    }
    Ok(table)
}

pub fn hbt(cfg: &RunConfig, out: &Path) -> Result<CsvTable, Failure> {
    let hc: HbtConfig = decode(cfg.resolved(Some("hbt"))?, "hbt config")?;
    hc.validate()?;
    let trace = hc.run()?;
    let (tau, values) = trace.symmetric();
    let mut table = CsvTable::new(vec!["tau [1/Gamma_spon]".into(), "coincidences".into()]);
    for (t, v) in tau.into_iter().zip(values) {
        table.push(vec![t, v]);
    }
    let path = write_table(&table, out, &hc.name)?;
    println!("{}: {} delays -> {}", hc.name, table.rows.len(), path.display());
    if hc.n_pulses > 1 {
        println!("p34 from the first side peak: {}", format_sig(trace.p34_estimate(1)));
    }
    Ok(table)
}

pub fn validate() -> Result<(), Failure> {
    let checks = oracle_suite();
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} oracle check(s) failed")));
    }
    Ok(())
}
