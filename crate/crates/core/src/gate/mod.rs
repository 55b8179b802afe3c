//! Linear-optics controlled-sign gate with a time-jittered helper photon.

mod fidelity;
mod fit;
mod fock;
mod network;

pub use fidelity::{
    averaged_fidelity, fidelity_crossing, input_search_set, jittered_gate_fidelity,
    min_fidelity_curve, postselect_11, run_gate, visibility, Branch, FidelityPoint, GateInput,
    JitterModel, Postselection, ANCILLAS, BASIS, RAILS,
};
pub use fit::{fit_rational, RationalFit};
pub use fock::{
    occupation_norm, photon_count, Mode, Occupation, PhotonicState, Tag, MAX_PHOTONS, MODES,
    SPATIAL_MODES,
};
pub use network::{apply_network, cs_gate_network, theta_1, theta_4, LinearNetwork, SpatialUnitary};

/// Success probability of the heralded gate with ideal photons.
pub const IDEAL_SUCCESS: f64 = 2.0 / 27.0;

/// Settings of the fidelity-curve computation.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub comment: Option<String>,
    pub epsilon0_over_tau: Vec<f64>,
    pub quadrature_nodes: usize,
    pub random_inputs: usize,
    pub seed: u64,
}

impl GateConfig {
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../../presets/gate.json")).expect("bundled gate preset parses")
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.quadrature_nodes < 32 {
            return Err(crate::SimError::param(format!(
                "quadrature_nodes must be at least 32, got {}",
                self.quadrature_nodes
            )));
        }
        if self.epsilon0_over_tau.is_empty() {
            return Err(crate::SimError::param("epsilon0_over_tau grid is empty"));
        }
        for &x in &self.epsilon0_over_tau {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(crate::SimError::param(format!("epsilon0_over_tau must be >= 0, got {x}")));
            }
        }
        Ok(())
    }

    pub fn inputs(&self) -> Vec<GateInput> {
        input_search_set(self.seed, self.random_inputs)
    }
}
