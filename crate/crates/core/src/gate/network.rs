//! Passive linear networks built from two-mode beam splitters.

use crate::error::{Result, SimError};
use crate::interference::BeamSplitter;
use crate::operator::C64;

use super::fock::{occupation_norm, Occupation, PhotonicState, MODES, SPATIAL_MODES};

/// Splitter angle shared by the first three elements of the gate.
pub fn theta_1() -> f64 {
    (1.0 / 3.0f64.sqrt()).acos()
}

/// Angle of the last splitter, mixing the two ancillas.
pub fn theta_4() -> f64 {
    ((3.0 + 6.0f64.sqrt()) / 6.0).sqrt().acos()
}

/// Beam splitters applied in order, each acting on a pair of spatial modes.
/// Spectral components of a spatial mode transform identically.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearNetwork {
    pub elements: Vec<((usize, usize), BeamSplitter)>,
}

pub type SpatialUnitary = [[C64; SPATIAL_MODES]; SPATIAL_MODES];

impl LinearNetwork {
    pub fn new(elements: Vec<((usize, usize), BeamSplitter)>) -> Result<Self> {
        for &((i, j), _) in &elements {
            if i == j || i >= SPATIAL_MODES || j >= SPATIAL_MODES {
                return Err(SimError::param(format!("invalid mode pair ({i}, {j})")));
            }
        }
        Ok(LinearNetwork { elements })
    }

    /// Composite transformation on spatial modes: `a_k → Σ U[k][l] a_l`.
    pub fn unitary(&self) -> SpatialUnitary {
        let zero = C64::new(0.0, 0.0);
        let mut u = [[zero; SPATIAL_MODES]; SPATIAL_MODES];
        for (k, row) in u.iter_mut().enumerate() {
            row[k] = C64::new(1.0, 0.0);
        }
        for &((i, j), bs) in &self.elements {
            let b = bs.unitary();
            for col in 0..SPATIAL_MODES {
                let (ui, uj) = (u[i][col], u[j][col]);
                u[i][col] = b[0][0] * ui + b[0][1] * uj;
                u[j][col] = b[1][0] * ui + b[1][1] * uj;
            }
        }
        u
    }

    /// Largest entry of `U U† − 1`.
    pub fn unitarity_error(&self) -> f64 {
        let u = self.unitary();
        let mut worst: f64 = 0.0;
        for i in 0..SPATIAL_MODES {
            for j in 0..SPATIAL_MODES {
                let mut acc: C64 = (0..SPATIAL_MODES).map(|k| u[i][k] * u[j][k].conj()).sum();
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

/// The controlled-sign network: rails 0 and 1, ancillas 2 and 3.
///
/// The closing `π` element multiplies both rails by −1 so that the
/// heralded output carries no rail-dependent sign besides the `|11⟩` flip.
pub fn cs_gate_network() -> LinearNetwork {
    let t1 = theta_1();
    let bs = |xi: f64| BeamSplitter::new(xi, 0.0);
    LinearNetwork {
        elements: vec![
            ((0, 2), bs(t1)),
            ((1, 3), bs(t1)),
            ((0, 1), bs(-t1)),
            ((2, 3), bs(theta_4())),
            ((0, 1), bs(std::f64::consts::PI)),
        ],
    }
}

/// Rewrites every creation operator `a_l† → Σ_k U[k][l] a_k†` and expands.
pub fn apply_network(state: &PhotonicState, network: &LinearNetwork) -> Result<PhotonicState> {
    let u = network.unitary();
    let mut out = PhotonicState::empty();
    for (occ, &amp) in state.terms() {
        let photons: Vec<usize> = occ
            .iter()
            .enumerate()
            .flat_map(|(m, &n)| std::iter::repeat_n(m, n as usize))
            .collect();
        let mut partial: Vec<(Occupation, C64)> = vec![([0; MODES], amp / occupation_norm(occ))];
        for &m in &photons {
            let (spatial, tag) = (m / 2, m % 2);
            let mut next = Vec::with_capacity(partial.len() * SPATIAL_MODES);
            for (o, a) in &partial {
                for (k, row) in u.iter().enumerate() {
                    let c = row[spatial];
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut o2 = *o;
                    o2[2 * k + tag] += 1;
                    next.push((o2, a * c));
                }
            }
            partial = next;
        }
        for (o, a) in partial {
            out.add(&o, a * occupation_norm(&o))?;
        }
    }
    Ok(out)
}
