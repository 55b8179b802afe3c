//! Emitter models: level structure, laser coupling and dissipators for the
//! incoherently pumped three-level dot and the cavity-assisted Raman emitter.

use crate::error::{check_rate, Result, SimError};
use crate::operator::{Dissipator, Drive, GaussianPulse, Operator, C64};

/// Level indices of the incoherently pumped dot.
pub mod incoherent {
    pub const G: usize = 0;
    pub const E: usize = 1;
    pub const P: usize = 2;
}

/// Level indices of the Raman emitter. `L1`..`L4` are the electron spin-up
/// state, the trion, spin-down with one cavity photon, and spin-down with an
/// empty cavity.
pub mod raman {
    pub const L1: usize = 0;
    pub const L2: usize = 1;
    pub const L3: usize = 2;
    pub const L4: usize = 3;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelParams {
    Incoherent {
        gamma_spon: f64,
        purcell: f64,
        gamma_relax: f64,
        gamma_deph: f64,
    },
    Raman {
        gamma_spon: f64,
        g: f64,
        kappa: f64,
        theta: f64,
        gamma_deph: f64,
    },
}

impl From<GaussianPulse> for Drive {
    fn from(p: GaussianPulse) -> Drive {
        Drive::Pulse(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmitterModel {
    pub params: ModelParams,
    pub dim: usize,
    /// Time-independent part of the Hamiltonian.
    pub static_hamiltonian: Operator,
    /// Multiplied by Ω(t) and added to the static part.
    pub drive_coupling: Operator,
    pub drive: Drive,
    pub dissipators: Vec<Dissipator>,
    /// Level whose population is the emitting population.
    pub emission_upper: usize,
    /// `(upper, lower)`: the first-order correlator is
    /// `⟨σ_{upper,lower}(t+τ) σ_{lower,upper}(t)⟩`.
    pub emission_pair: (usize, usize),
    /// Levels that hold population only while a photon is being generated.
    pub transient_levels: Vec<usize>,
    /// Level the emitter is prepared in before each pulse.
    pub initial_level: usize,
}

impl EmitterModel {
    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        self.static_hamiltonian + self.drive_coupling.scale_re(self.drive.at(t))
    }

    /// `(A, B)` of the first-order correlator `⟨A(t+τ) B(t)⟩`.
    pub fn coherence_operators(&self) -> (Operator, Operator) {
        let (u, l) = self.emission_pair;
        (
            Operator::projector(self.dim, u, l),
            Operator::projector(self.dim, l, u),
        )
    }

    pub fn upper_projector(&self) -> Operator {
        Operator::basis_state(self.dim, self.emission_upper)
    }

    pub fn initial_state(&self) -> Operator {
        Operator::basis_state(self.dim, self.initial_level)
    }

    /// Rate multiplying the upper-level population in the photon flux.
    pub fn emission_rate(&self) -> f64 {
        match self.params {
            ModelParams::Incoherent { gamma_spon, purcell, .. } => (purcell + 1.0) * gamma_spon,
            ModelParams::Raman { kappa, .. } => 2.0 * kappa,
        }
    }

    /// Slowest relaxation time of the transient levels, used to size windows.
    pub fn emission_lifetime(&self) -> f64 {
        match self.params {
            ModelParams::Incoherent {
                gamma_spon,
                purcell,
                gamma_relax,
                ..
            } => {
                let mut life = 1.0 / ((purcell + 1.0) * gamma_spon).max(f64::MIN_POSITIVE);
                if gamma_relax > 0.0 {
                    life += 1.0 / gamma_relax;
                }
                life
            }
            ModelParams::Raman { gamma_spon, kappa, .. } => {
                1.0 / (2.0 * kappa).max(f64::MIN_POSITIVE) + 1.0 / gamma_spon.max(f64::MIN_POSITIVE)
            }
        }
    }

    /// True when emission returns the emitter to its initial level.
    pub fn recycles(&self) -> bool {
        matches!(self.params, ModelParams::Incoherent { .. })
    }

    pub fn with_drive(&self, drive: Drive) -> Self {
        EmitterModel {
            drive,
            ..self.clone()
        }
    }

    pub fn with_peak(&self, peak: f64) -> Self {
        self.with_drive(self.drive.with_peak(peak))
    }

    /// `L(ρ) = −i[H(t), ρ] + Σ D_k(ρ)`, evaluated directly on operators.
    pub fn lindblad_rhs(&self, t: f64, rho: &Operator) -> Operator {
        let h = self.hamiltonian_at(t);
        let mut out = h.commutator(rho).scale(C64::new(0.0, -1.0));
        for d in &self.dissipators {
            out += d.apply(rho);
        }
        out
    }

    pub fn generator(&self) -> Generator {
        Generator::new(self)
    }
}

/// Incoherently pumped dot: the laser drives g↔p, p relaxes to e, and e
/// emits into the cavity-enhanced channel at `(F_P + 1) Γ_spon`.
pub fn build_incoherent_model(
    gamma_spon: f64,
    purcell: f64,
    gamma_relax: f64,
    gamma_deph: f64,
    drive: impl Into<Drive>,
) -> Result<EmitterModel> {
    use incoherent::*;
    check_rate("gamma_spon", gamma_spon)?;
    check_rate("purcell", purcell)?;
    check_rate("gamma_relax", gamma_relax)?;
    check_rate("gamma_deph", gamma_deph)?;
    let dim = 3;
    let i = C64::new(0.0, 1.0);
    let coupling = (Operator::projector(dim, P, G) - Operator::projector(dim, G, P)).scale(i);
    let dissipators = vec![
        Dissipator::new(gamma_relax, Operator::projector(dim, E, P)),
        Dissipator::new((purcell + 1.0) * gamma_spon, Operator::projector(dim, G, E)),
        // D[σ_ee] at rate 2γ damps every e-coherence by exactly γ
        Dissipator::new(2.0 * gamma_deph, Operator::projector(dim, E, E)),
    ];
    Ok(EmitterModel {
        params: ModelParams::Incoherent {
            gamma_spon,
            purcell,
            gamma_relax,
            gamma_deph,
        },
        dim,
        static_hamiltonian: Operator::zeros(dim),
        drive_coupling: coupling,
        drive: drive.into(),
        dissipators,
        emission_upper: E,
        emission_pair: (E, G),
        transient_levels: vec![E, P],
        initial_level: G,
    })
}

/// Cavity-assisted spin-flip Raman emitter with one cavity photon at most.
pub fn build_raman_model(
    gamma_spon: f64,
    g: f64,
    kappa: f64,
    theta: f64,
    gamma_deph: f64,
    drive: impl Into<Drive>,
) -> Result<EmitterModel> {
    use raman::*;
    check_rate("gamma_spon", gamma_spon)?;
    check_rate("g", g)?;
    check_rate("kappa", kappa)?;
    check_rate("gamma_deph", gamma_deph)?;
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(SimError::param(format!("theta must lie in [0, π/2], got {theta}")));
    }
    let dim = 4;
    let i = C64::new(0.0, 1.0);
    let cavity = (Operator::projector(dim, L3, L2) - Operator::projector(dim, L2, L3)).scale(i * g);
    let laser = (Operator::projector(dim, L3, L1) - Operator::projector(dim, L1, L3)).scale(i);
    let (s, c) = theta.sin_cos();
    let dissipators = vec![
        Dissipator::new(2.0 * kappa, Operator::projector(dim, L4, L2)),
        Dissipator::new(gamma_spon * c * c, Operator::projector(dim, L1, L3)),
        Dissipator::new(gamma_spon * s * s, Operator::projector(dim, L4, L3)),
        Dissipator::new(2.0 * gamma_deph, Operator::projector(dim, L3, L3)),
    ];
    Ok(EmitterModel {
        params: ModelParams::Raman {
            gamma_spon,
            g,
            kappa,
            theta,
            gamma_deph,
        },
        dim,
        static_hamiltonian: cavity,
        drive_coupling: laser,
        drive: drive.into(),
        dissipators,
        emission_upper: L2,
        emission_pair: (L2, L4),
        transient_levels: vec![L2, L3],
        initial_level: L1,
    })
}

/// Cavity Purcell factor `2 g² / (κ Γ_spon)`.
pub fn purcell_factor(g: f64, kappa: f64, gamma_spon: f64) -> Result<f64> {
    let denom = kappa * gamma_spon;
    if !(denom.is_finite() && denom > 0.0) {
        return Err(SimError::param(format!(
            "Purcell factor needs kappa * gamma_spon > 0, got {denom}"
        )));
    }
    Ok(2.0 * g * g / denom)
}

/// Coupling that realizes a given Purcell factor.
pub fn coupling_for_purcell(purcell: f64, kappa: f64, gamma_spon: f64) -> Result<f64> {
    check_rate("purcell", purcell)?;
    Ok((purcell * kappa * gamma_spon / 2.0).sqrt())
}

/// Sparse superoperator `L0 + Ω(t) L1` acting on row-major vectorized operators.
#[derive(Clone, Debug)]
pub struct Generator {
    n: usize,
    fixed: Vec<(usize, usize, C64)>,
    driven: Vec<(usize, usize, C64)>,
    drive: Drive,
}

impl Generator {
    pub fn new(model: &EmitterModel) -> Self {
        let d = model.dim;
        let n = d * d;
        let mut fixed = Vec::new();
        let mut driven = Vec::new();
        let minus_i = C64::new(0.0, -1.0);
        for col in 0..n {
            let basis = Operator::projector(d, col / d, col % d);
            let mut l0 = model.static_hamiltonian.commutator(&basis).scale(minus_i);
            for diss in &model.dissipators {
                l0 += diss.apply(&basis);
            }
            let l1 = model.drive_coupling.commutator(&basis).scale(minus_i);
            for (row, v) in l0.as_slice().iter().enumerate() {
                if v.norm() > 0.0 {
                    fixed.push((row, col, *v));
                }
            }
            for (row, v) in l1.as_slice().iter().enumerate() {
                if v.norm() > 0.0 {
                    driven.push((row, col, *v));
                }
            }
        }
        Generator {
            n,
            fixed,
            driven,
            drive: model.drive,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn apply(&self, t: f64, x: &[C64], out: &mut [C64]) {
        out[..self.n].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for &(r, c, v) in &self.fixed {
            out[r] += v * x[c];
        }
        let omega = self.drive.at(t);
        if omega != 0.0 {
            for &(r, c, v) in &self.driven {
                out[r] += v * x[c] * omega;
            }
        }
    }

    /// Dense matrix of the generator at time t (row-major, n × n).
    pub fn dense_at(&self, t: f64) -> Vec<C64> {
        let mut m = vec![C64::new(0.0, 0.0); self.n * self.n];
        for &(r, c, v) in &self.fixed {
            m[r * self.n + c] += v;
        }
        let omega = self.drive.at(t);
        for &(r, c, v) in &self.driven {
            m[r * self.n + c] += v * omega;
        }
        m
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn random_density(dim: usize, vals: &[f64]) -> Operator {
        // ρ = M M† / Tr(M M†)
        let m = Operator::from_fn(dim, |i, j| C64::new(vals[i * dim + j], vals[16 + i * dim + j]));
        let r = m * m.dagger();
        r.scale_re(1.0 / r.trace().re)
    }

    fn models() -> Vec<EmitterModel> {
        let pulse = GaussianPulse::starting_at_zero(3.0, 0.5).unwrap();
        vec![
            build_incoherent_model(1.0, 4.0, 30.0, 0.7, pulse).unwrap(),
            build_raman_model(1.0, 5.0, 10.0, 0.6, 0.4, pulse).unwrap(),
        ]
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        for m in models() {
            for t in [0.0, 1.0, 3.0, 5.0] {
                assert!(m.hamiltonian_at(t).is_hermitian(1e-14));
            }
        }
    }

    #[test]
    fn purcell_examples() {
        assert!((purcell_factor(10.0, 10.0, 1.0).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(purcell_factor(0.0, 10.0, 1.0).unwrap(), 0.0);
        assert!((purcell_factor(200f64.sqrt(), 10.0, 1.0).unwrap() - 40.0).abs() < 1e-12);
        assert!(purcell_factor(1.0, 0.0, 1.0).is_err());
        let g = coupling_for_purcell(20.0, 5.0, 1.0).unwrap();
        assert!((purcell_factor(g, 5.0, 1.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(build_incoherent_model(1.0, -1.0, 1.0, 0.0, Drive::Off).is_err());
        assert!(build_incoherent_model(1.0, 1.0, 1.0, -0.1, Drive::Off).is_err());
        assert!(build_raman_model(1.0, 1.0, -10.0, FRAC_PI_4, 0.0, Drive::Off).is_err());
        assert!(build_raman_model(1.0, 1.0, 10.0, 2.0, 0.0, Drive::Off).is_err());
    }

    #[test]
    fn generator_matches_operator_form() {
        for m in models() {
            let gen = m.generator();
            let rho = random_density(m.dim, &(0..32).map(|k| ((k * 7919) % 13) as f64 / 13.0 - 0.4).collect::<Vec<_>>());
            for t in [0.5, 3.0] {
                let mut out = vec![C64::new(0.0, 0.0); gen.len()];
                gen.apply(t, rho.as_slice(), &mut out);
                let direct = m.lindblad_rhs(t, &rho);
                let diff: f64 = out.iter().zip(direct.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                assert!(diff < 1e-12);
            }
        }
    }

    #[test]
    fn raman_uncoupled_cavity_never_fills_level_two() {
        let pulse = GaussianPulse::starting_at_zero(5.0, 1.0).unwrap();
        let m = build_raman_model(1.0, 0.0, 10.0, FRAC_PI_4, 0.0, pulse).unwrap();
        // with g = 0 nothing in the generator feeds ρ22
        let gen = m.generator();
        let idx22 = raman::L2 * 4 + raman::L2;
        let feeds = gen
            .fixed
            .iter()
            .chain(gen.driven.iter())
            .any(|&(r, c, _)| r == idx22 && c != idx22);
        assert!(!feeds);
    }

    proptest! {
        #[test]
        fn generator_is_trace_preserving_and_hermiticity_preserving(
            vals in proptest::collection::vec(-1.0f64..1.0, 32),
            t in 0.0f64..6.0,
        ) {
            for m in models() {
                let rho = Operator::from_fn(m.dim, |i, j| C64::new(vals[i * m.dim + j], vals[16 + i * m.dim + j]));
                let l = m.lindblad_rhs(t, &rho);
                prop_assert!(l.trace().norm() < 1e-10);
                let l_dag = m.lindblad_rhs(t, &rho.dagger());
                prop_assert!((l.dagger() - l_dag).max_abs() < 1e-10);
            }
        }
    }
}
