//! Browser bindings for a few quick computations of the simulator.

use sps_core::emitters::figure_of_merit;
use sps_core::gate::{min_fidelity_curve, GateConfig};
use sps_core::interference::P34Options;
use sps_core::model::build_raman_model;
use sps_core::operator::GaussianPulse;
use wasm_bindgen::prelude::*;

fn js(e: sps_core::SimError) -> JsError {
    JsError::new(&e.to_string())
}

/// Worst-case gate fidelity over the default input set. Returns
/// `[visibility, min_fidelity]` pairs, flattened, one per grid value.
#[wasm_bindgen]
pub fn gate_curve(epsilon0_over_tau: Vec<f64>, random_inputs: usize) -> Result<Vec<f64>, JsError> {
    let cfg = GateConfig {
        epsilon0_over_tau,
        random_inputs,
        ..GateConfig::builtin()
    };
    cfg.validate().map_err(js)?;
    let curve = min_fidelity_curve(&cfg.epsilon0_over_tau, &cfg.inputs(), cfg.quadrature_nodes).map_err(js)?;
    Ok(curve.iter().flat_map(|p| [p.visibility, p.min_fidelity]).collect())
}

/// Two-photon visibility of a photon with uniform jitter in `[0, ε₀]`.
#[wasm_bindgen]
pub fn jitter_visibility(epsilon0_over_tau: f64) -> f64 {
    sps_core::gate::visibility(epsilon0_over_tau, 1.0)
}

/// Indistinguishability and collection efficiency of a cavity Raman source
/// driven by one Gaussian pulse, all rates in units of `Γ_spon`.
#[wasm_bindgen]
pub fn raman_source(g: f64, kappa: f64, theta: f64, gamma_deph: f64, pulse_width: f64, peak_rabi: f64) -> Result<Vec<f64>, JsError> {
    let pulse = GaussianPulse::starting_at_zero(peak_rabi, pulse_width).map_err(js)?;
    let model = build_raman_model(1.0, g, kappa, theta, gamma_deph, pulse).map_err(js)?;
    let fom = figure_of_merit(&model, &P34Options::default()).map_err(js)?;
    Ok(vec![fom.indistinguishability, fom.collection_efficiency])
}
