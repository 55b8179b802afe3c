//! Heralded gate output, fidelity against the ideal controlled-sign action,
//! and its average over emission-time jitter of the helper photon.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::operator::C64;
use crate::par;
use crate::quadrature::gauss_legendre;

use super::fock::{Mode, Occupation, PhotonicState, Tag, MODES};
use super::network::{apply_network, cs_gate_network};

/// Rail modes carrying the two-mode input; ancillas are heralded.
pub const RAILS: [usize; 2] = [0, 1];
pub const ANCILLAS: [usize; 2] = [2, 3];

/// Rail occupations in the order of the input amplitudes.
pub const BASIS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// `α|00⟩ + β|01⟩ + δ|10⟩ + γ|11⟩` on the two rails.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateInput {
    pub amplitudes: [C64; 4],
}

impl GateInput {
    /// Normalizes the given amplitudes; the zero vector is rejected.
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(SimError::param("gate input must have nonzero finite norm"));
        }
        Ok(GateInput {
            amplitudes: amplitudes.map(|a| a / norm),
        })
    }

    pub fn basis(index: usize) -> Self {
        let mut a = [C64::new(0.0, 0.0); 4];
        a[index] = C64::new(1.0, 0.0);
        GateInput { amplitudes: a }
    }

    pub fn real(amplitudes: [f64; 4]) -> Result<Self> {
        Self::new(amplitudes.map(|x| C64::new(x, 0.0)))
    }

    /// Matched-tag rail state with the helper photons in both ancillas.
    pub fn state(&self, helper: [C64; 2]) -> Result<PhotonicState> {
        let mut s = PhotonicState::empty();
        for (k, &(a, b)) in BASIS.iter().enumerate() {
            for (t, tag) in Tag::ALL.into_iter().enumerate() {
                let w = self.amplitudes[k] * helper[t];
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                let mut occ = rail_occupation(a, b);
                occ[Mode::new(ANCILLAS[0], Tag::Matched).index()] += 1;
                occ[Mode::new(ANCILLAS[1], tag).index()] += 1;
                s.add(&occ, w)?;
            }
        }
        Ok(s)
    }

    /// Ideal output: the `|11⟩` amplitude picks up a sign.
    pub fn target(&self) -> PhotonicState {
        let mut s = PhotonicState::empty();
        for (k, &(a, b)) in BASIS.iter().enumerate() {
            let sign = if (a, b) == (1, 1) { -1.0 } else { 1.0 };
            s.add(&rail_occupation(a, b), self.amplitudes[k] * sign).unwrap();
        }
        s
    }

    /// Index of the basis state, if this is one.
    pub fn basis_index(&self) -> Option<usize> {
        self.amplitudes.iter().position(|a| (a.norm_sqr() - 1.0).abs() < 1e-12)
    }
}

fn rail_occupation(a: u8, b: u8) -> Occupation {
    let mut occ = [0u8; MODES];
    occ[Mode::new(RAILS[0], Tag::Matched).index()] = a;
    occ[Mode::new(RAILS[1], Tag::Matched).index()] = b;
    occ
}

/// Uniform emission-time jitter of one photon relative to the others.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterModel {
    pub epsilon0: f64,
    pub tau: f64,
}

impl JitterModel {
    pub fn new(epsilon0: f64, tau: f64) -> Result<Self> {
        if !(epsilon0 >= 0.0) || !epsilon0.is_finite() {
            return Err(SimError::param(format!("jitter bound must be >= 0, got {epsilon0}")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(SimError::param(format!("pulse width must be > 0, got {tau}")));
        }
        Ok(JitterModel { epsilon0, tau })
    }

    /// Matched-mode amplitude of a photon delayed by `epsilon`; its square is
    /// the two-photon visibility `e^{−ε/τ}`.
    pub fn overlap(&self, epsilon: f64) -> f64 {
        (-epsilon / (2.0 * self.tau)).exp()
    }

    /// `[matched, orthogonal]` amplitudes of the delayed photon.
    pub fn helper(&self, epsilon: f64) -> [C64; 2] {
        let c = self.overlap(epsilon);
        [C64::new(c, 0.0), C64::new((1.0 - c * c).max(0.0).sqrt(), 0.0)]
    }

    pub fn visibility(&self) -> f64 {
        visibility(self.epsilon0, self.tau)
    }
}

/// Average of `e^{−ε/τ}` over `ε` uniform in `[0, ε₀]`.
pub fn visibility(epsilon0: f64, tau: f64) -> f64 {
    let x = epsilon0 / tau;
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Heralded output for one detection outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    /// Spectral tags registered by the ancilla detectors.
    pub tags: [Tag; 2],
    /// Unnormalized rail state; its squared norm is the branch probability.
    pub state: PhotonicState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Postselection {
    pub branches: Vec<Branch>,
    pub probability: f64,
}

impl Postselection {
    /// `Σ_b |⟨target|ψ_b⟩|² / P`, the pure-target fidelity of the heralded mixture.
    pub fn fidelity(&self, target: &PhotonicState) -> Result<f64> {
        if !(self.probability > 0.0) {
            return Err(SimError::UndefinedFidelity);
        }
        let overlap: f64 = self.branches.iter().map(|b| target.inner(&b.state).norm_sqr()).sum();
        Ok(overlap / self.probability)
    }
}

/// Keeps terms with exactly one photon in each ancilla, whatever its tag.
/// Outcomes that differ in the detected tags are kept apart as a mixture.
pub fn postselect_11(state: &PhotonicState) -> Postselection {
    let mut branches: Vec<Branch> = Vec::new();
    for (occ, &amp) in state.terms() {
        let mut tags = [Tag::Matched; 2];
        let mut heralded = true;
        for (slot, &anc) in ANCILLAS.iter().enumerate() {
            let m = occ[Mode::new(anc, Tag::Matched).index()];
            let o = occ[Mode::new(anc, Tag::Orthogonal).index()];
            if m + o != 1 {
                heralded = false;
                break;
            }
            tags[slot] = if m == 1 { Tag::Matched } else { Tag::Orthogonal };
        }
        if !heralded {
            continue;
        }
        let mut rails = *occ;
        for anc in ANCILLAS {
            for tag in Tag::ALL {
                rails[Mode::new(anc, tag).index()] = 0;
            }
        }
        let idx = match branches.iter().position(|b| b.tags == tags) {
            Some(i) => i,
            None => {
                branches.push(Branch { tags, state: PhotonicState::empty() });
                branches.len() - 1
            }
        };
        branches[idx].state.add(&rails, amp).expect("rail state within capacity");
    }
    branches.sort_by_key(|b| b.tags);
    let probability = branches.iter().map(|b| b.state.norm_sqr()).sum();
    Postselection { branches, probability }
}

/// Runs the gate on `input` with the helper in ancilla 4 delayed by `epsilon`.
pub fn run_gate(input: &GateInput, epsilon: f64, jm: &JitterModel) -> Result<Postselection> {
    let state = input.state(jm.helper(epsilon))?;
    Ok(postselect_11(&apply_network(&state, &cs_gate_network())?))
}

pub fn jittered_gate_fidelity(input: &GateInput, epsilon: f64, jm: &JitterModel) -> Result<f64> {
    fast_postselect(input, jm.helper(epsilon)).fidelity(&input.target())
}

/// Heralded branches for every basis input and helper tag; the gate is
/// linear in both, so any run is a combination of these.
fn basis_outputs() -> &'static [[Postselection; 2]; 4] {
    static CACHE: OnceLock<[[Postselection; 2]; 4]> = OnceLock::new();
    CACHE.get_or_init(|| {
        let net = cs_gate_network();
        std::array::from_fn(|k| {
            std::array::from_fn(|t| {
                let mut helper = [C64::new(0.0, 0.0); 2];
                helper[t] = C64::new(1.0, 0.0);
                let state = GateInput::basis(k).state(helper).expect("basis state within capacity");
                postselect_11(&apply_network(&state, &net).expect("gate stays within capacity"))
            })
        })
    })
}

fn fast_postselect(input: &GateInput, helper: [C64; 2]) -> Postselection {
    let mut branches: Vec<Branch> = Vec::new();
    for (k, per_tag) in basis_outputs().iter().enumerate() {
        for (t, post) in per_tag.iter().enumerate() {
            let w = input.amplitudes[k] * helper[t];
            if w.norm_sqr() == 0.0 {
                continue;
            }
            for b in &post.branches {
                match branches.iter_mut().find(|x| x.tags == b.tags) {
                    Some(x) => x.state.add_state(&b.state, w),
                    None => branches.push(Branch { tags: b.tags, state: b.state.scaled(w) }),
                }
            }
        }
    }
    branches.sort_by_key(|b| b.tags);
    let probability = branches.iter().map(|b| b.state.norm_sqr()).sum();
    Postselection { branches, probability }
}

/// Fidelity averaged over `ε` uniform in `[0, ε₀]` with an `nodes`-point Gauss–Legendre rule.
pub fn averaged_fidelity(input: &GateInput, jm: &JitterModel, nodes: usize) -> Result<f64> {
    if jm.epsilon0 == 0.0 {
        return jittered_gate_fidelity(input, 0.0, jm);
    }
    let (eps, w) = gauss_legendre(nodes, 0.0, jm.epsilon0);
    let mut acc = 0.0;
    for (e, wi) in eps.iter().zip(&w) {
        acc += wi * jittered_gate_fidelity(input, *e, jm)?;
    }
    Ok(acc / jm.epsilon0)
}

/// Basis states, real equal-weight-family superpositions of two basis states,
/// and Haar-random states drawn from a seeded generator.
pub fn input_search_set(seed: u64, n_random: usize) -> Vec<GateInput> {
    let mut set: Vec<GateInput> = (0..4).map(GateInput::basis).collect();
    for i in 0..4 {
        for j in i + 1..4 {
            for angle in [std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_3] {
                for sign in [1.0, -1.0] {
                    let mut a = [0.0; 4];
                    a[i] = angle.cos();
                    a[j] = sign * angle.sin();
                    set.push(GateInput::real(a).expect("nonzero amplitudes"));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let amps: [C64; 4] = std::array::from_fn(|_| {
            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        set.push(GateInput::new(amps).expect("gaussian vector is nonzero"));
    }
    set
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityPoint {
    pub epsilon0_over_tau: f64,
    pub visibility: f64,
    pub min_fidelity: f64,
    /// Position of the worst input in the search set.
    pub worst_input: usize,
}

fn worst_case(x: f64, inputs: &[GateInput], nodes: usize) -> Result<(f64, usize)> {
    let jm = JitterModel::new(x, 1.0)?;
    let values = par::try_map(inputs, |inp| averaged_fidelity(inp, &jm, nodes))?;
    let mut best = (f64::INFINITY, 0);
    for (i, &f) in values.iter().enumerate() {
        if f < best.0 {
            best = (f, i);
        }
    }
    Ok(best)
}

/// Minimum over `inputs` of the jitter-averaged fidelity at each `ε₀/τ`.
pub fn min_fidelity_curve(
    grid: &[f64],
    inputs: &[GateInput],
    nodes: usize,
) -> Result<Vec<FidelityPoint>> {
    if inputs.is_empty() {
        return Err(SimError::param("input search set is empty"));
    }
    if nodes < 1 {
        return Err(SimError::param("quadrature needs at least one node"));
    }
    grid.iter()
        .map(|&x| {
            let (f, i) = worst_case(x, inputs, nodes)?;
            Ok(FidelityPoint {
                epsilon0_over_tau: x,
                visibility: visibility(x, 1.0),
                min_fidelity: f,
                worst_input: i,
            })
        })
        .collect()
}

/// Smallest `ε₀/τ` in `[0, upper]` at which the worst-case fidelity drops to `threshold`.
pub fn fidelity_crossing(
    threshold: f64,
    inputs: &[GateInput],
    nodes: usize,
    upper: f64,
) -> Result<Option<f64>> {
    let f = |x: f64| worst_case(x, inputs, nodes).map(|r| r.0 - threshold);
    if f(upper)? > 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > 1e-7 * upper {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
