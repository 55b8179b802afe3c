//! Simulation of pulsed single-photon sources: Lindblad dynamics of
//! quantum-dot emitters, two-photon interference and the fidelity of a
//! linear-optics controlled-sign gate under emission-time jitter.

pub mod dynamics;
pub mod emitters;
pub mod error;
pub mod gate;
pub mod interference;
pub mod model;
pub mod ode;
pub mod operator;
pub mod par;
pub mod presets;
pub mod quadrature;
pub mod validation;

pub use error::{Result, SimError};
