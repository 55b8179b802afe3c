//! Two-photon interference at a beam splitter: coincidence surfaces, the
//! normalized coincidence probability p34 and pulse-train HBT traces.

use serde::Serialize;

use crate::dynamics::{
    evolve, evolve_single_shot, first_order_surface, integrate_driven_sampled, population_product_surface, steady_state,
    tau_integrals, CorrelationSurface, SurfaceKind, Trajectory, DEFAULT_TOL,
};
use crate::error::{Result, SimError};
use crate::model::EmitterModel;
use crate::operator::{Drive, GaussianPulse, Operator, C64};
use crate::par;

/// Lossless two-port beam splitter acting on annihilation operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitter {
    pub xi: f64,
    pub phi: f64,
}

impl BeamSplitter {
    pub fn new(xi: f64, phi: f64) -> Self {
        BeamSplitter { xi, phi }
    }

    pub fn balanced() -> Self {
        BeamSplitter::new(std::f64::consts::FRAC_PI_4, 0.0)
    }

    /// `[[cos ξ, −e^{−iφ} sin ξ], [e^{iφ} sin ξ, cos ξ]]`.
    pub fn unitary(&self) -> [[C64; 2]; 2] {
        let (s, c) = self.xi.sin_cos();
        let e = C64::from_polar(1.0, self.phi);
        [[C64::new(c, 0.0), -e.conj() * s], [e * s, C64::new(c, 0.0)]]
    }

    /// Largest entry of `U U† − 1`.
    pub fn unitarity_error(&self) -> f64 {
        let u = self.unitary();
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..2 {
                    acc += u[i][k] * u[j][k].conj();
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// Coincidence rate between the outputs for two independent identical
    /// emitters, expanded term by term from the output operators.
    ///
    /// `p_t`, `p_t_tau` are the emitter populations at `t` and `t + τ`,
    /// `g1` is `G̃⁽¹⁾(t, τ)`.
    pub fn coincidence_four_term(&self, p_t: f64, p_t_tau: f64, g1: C64) -> f64 {
        let u = self.unitary();
        let direct = u[0][0].norm_sqr() * u[1][1].norm_sqr() * p_t * p_t_tau
            + u[0][1].norm_sqr() * u[1][0].norm_sqr() * p_t * p_t_tau;
        // ⟨a1†(t) a1(t+τ)⟩⟨a2†(t+τ) a2(t)⟩ = conj(G1)·G1 and its conjugate partner
        let cross = u[0][0].conj() * u[1][1].conj() * u[1][0] * u[0][1] * g1.conj() * g1;
        direct + 2.0 * cross.re
    }

    /// The same rate in closed form: `(cos⁴ξ + sin⁴ξ) P P − 2 cos²ξ sin²ξ |G1|²`.
    pub fn coincidence(&self, p_t: f64, p_t_tau: f64, g1: C64) -> f64 {
        let (s, c) = self.xi.sin_cos();
        let (s2, c2) = (s * s, c * c);
        (c2 * c2 + s2 * s2) * p_t * p_t_tau - 2.0 * c2 * s2 * g1.norm_sqr()
    }
}

/// `½(P(t)P(t+τ) − |G̃⁽¹⁾(t,τ)|²)` for a balanced splitter.
pub fn g2_34_surface(populations: &CorrelationSurface, g1: &CorrelationSurface) -> Result<CorrelationSurface> {
    if !populations.same_grid(g1) {
        return Err(SimError::param("population and coherence surfaces use different grids"));
    }
    if populations.kind != SurfaceKind::PopulationProduct {
        return Err(SimError::param("first argument must be a population-product surface"));
    }
    let values = populations
        .values
        .iter()
        .zip(&g1.values)
        .map(|(pp, g)| {
            let v = 0.5 * (pp.re - g.norm_sqr());
            C64::new(if v < 0.0 && v > -1e-8 { 0.0 } else { v }, 0.0)
        })
        .collect();
    Ok(CorrelationSurface {
        t_grid: populations.t_grid.clone(),
        tau_grid: populations.tau_grid.clone(),
        values,
        kind: SurfaceKind::G2Surface,
    })
}

/// Normalized coincidence probability for one excitation pulse.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterferenceReport {
    pub p34: f64,
    pub indistinguishability: f64,
    pub numerator_integral: f64,
    pub denominator_integral: f64,
    /// Number of t nodes in the final quadrature.
    pub t_nodes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct P34Options {
    /// Integrator tolerance.
    pub tol: f64,
    /// Stop refining the t grid once p34 changes by less than this.
    pub quad_tol: f64,
    /// Largest allowed emission left after the window, relative to the total.
    pub residual: f64,
    pub max_refinements: usize,
}

impl Default for P34Options {
    fn default() -> Self {
        P34Options {
            tol: DEFAULT_TOL,
            quad_tol: 1e-4,
            residual: 1e-4,
            max_refinements: 8,
        }
    }
}

/// Smallest t grid used before the first refinement.
const MIN_T_NODES: usize = 128;

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// p34 of the model's single pulse with default options.
pub fn p34(model: &EmitterModel) -> Result<InterferenceReport> {
    p34_with(model, &P34Options::default())
}

pub fn p34_with(model: &EmitterModel, opts: &P34Options) -> Result<InterferenceReport> {
    if model.drive.pulse().is_none() || matches!(model.drive, Drive::Train { .. }) {
        return Err(SimError::param("p34 needs a model driven by a single pulse"));
    }
    let traj = single_shot(model, opts)?;
    p34_from_trajectory(model, &traj, opts)
}

pub(crate) fn single_shot(model: &EmitterModel, opts: &P34Options) -> Result<Trajectory> {
    // absolute residual well below the relative bound for any emission above 1e-3
    evolve_single_shot(model, opts.tol, 1e-3 * opts.residual)
}

/// Checks that the emission has finished within the trajectory.
pub(crate) fn check_window(model: &EmitterModel, traj: &Trajectory, residual: f64) -> Result<f64> {
    let emitted = model.emission_rate() * traj.integrated_population(model.emission_upper);
    let rho = traj.final_state();
    let left: f64 = model.transient_levels.iter().map(|&k| rho.get(k, k).re).sum();
    if emitted > 0.0 && left > residual * emitted {
        return Err(SimError::Window(format!(
            "{left:.3e} of population still excited after t = {:.3e} (emitted {emitted:.3e})",
            traj.t_end()
        )));
    }
    Ok(emitted)
}

/// p34 from a trajectory that already spans the whole emission.
pub fn p34_from_trajectory(model: &EmitterModel, traj: &Trajectory, opts: &P34Options) -> Result<InterferenceReport> {
    check_window(model, traj, opts.residual)?;
    let gen = model.generator();
    let t_end = traj.t_end();
    let u = model.emission_upper;
    let eval = |t: &f64| -> Result<(f64, f64)> {
        let (ip, ig) = tau_integrals(model, &gen, traj, *t, t_end, opts.tol)?;
        let p = traj.population(u, *t);
        Ok((0.5 * (p * ip - ig), 0.5 * p * ip))
    };

    // Start from a strided subset of the integrator's step times, then halve
    // the stride; once every step time is used, bisect the intervals.
    let full = traj.time_grid();
    let mut stride = 1usize;
    while full.len() / (2 * stride) >= MIN_T_NODES {
        stride *= 2;
    }
    let pick = |stride: usize| -> Vec<f64> {
        let mut v: Vec<f64> = full.iter().step_by(stride).copied().collect();
        if (full.len() - 1) % stride != 0 {
            v.push(*full.last().unwrap());
        }
        v
    };
    let mut nodes = pick(stride);
    let mut values = par::try_map(&nodes, eval)?;
    let ratio = |values: &[(f64, f64)], nodes: &[f64]| {
        let num: Vec<f64> = values.iter().map(|v| v.0).collect();
        let den: Vec<f64> = values.iter().map(|v| v.1).collect();
        (trapezoid(nodes, &num), trapezoid(nodes, &den))
    };
    let (mut num, mut den) = ratio(&values, &nodes);
    for _ in 0..opts.max_refinements {
        let finer = if stride > 1 {
            stride /= 2;
            pick(stride)
        } else {
            let mut v = Vec::with_capacity(2 * nodes.len());
            for w in nodes.windows(2) {
                v.push(w[0]);
                v.push(0.5 * (w[0] + w[1]));
            }
            v.push(*nodes.last().unwrap());
            v
        };
        let fresh: Vec<f64> = finer
            .iter()
            .copied()
            .filter(|t| nodes.binary_search_by(|x| x.total_cmp(t)).is_err())
            .collect();
        let fresh_values = par::try_map(&fresh, eval)?;
        let mut merged = Vec::with_capacity(finer.len());
        let (mut i, mut j) = (0, 0);
        while i < nodes.len() || j < fresh.len() {
            if j == fresh.len() || (i < nodes.len() && nodes[i] < fresh[j]) {
                merged.push((nodes[i], values[i]));
                i += 1;
            } else {
                merged.push((fresh[j], fresh_values[j]));
                j += 1;
            }
        }
        nodes = merged.iter().map(|m| m.0).collect();
        values = merged.iter().map(|m| m.1).collect();
        let (n2, d2) = ratio(&values, &nodes);
        let converged = den > 0.0 && d2 > 0.0 && (n2 / d2 - num / den).abs() < opts.quad_tol;
        num = n2;
        den = d2;
        if converged {
            break;
        }
    }
    if den < 1e-12 {
        return Err(SimError::Degenerate(format!(
            "coincidence normalization {den:.3e} is too small; the emitter barely emits"
        )));
    }
    let p = (num / den).max(0.0);
    Ok(InterferenceReport {
        p34: p,
        indistinguishability: 1.0 - p,
        numerator_integral: num,
        denominator_integral: den,
        t_nodes: nodes.len(),
    })
}

/// `½(1 − e^{−2γτ})`: the normalized cw coincidence function.
pub fn cw_g2(gamma: f64, tau: f64) -> f64 {
    -0.5 * (-2.0 * gamma * tau).exp_m1()
}

/// Normalized cw coincidence function `½(1 − |g⁽¹⁾(τ)|²)` of a model under a
/// constant drive, from its steady state and the regression engine.
pub fn cw_g2_simulated(model: &EmitterModel, tau_grid: &[f64]) -> Result<Vec<f64>> {
    if !matches!(model.drive, Drive::Constant(_)) {
        return Err(SimError::param("cw coincidence needs a constant drive"));
    }
    let rho = steady_state(model)?;
    let p_ss = rho.get(model.emission_upper, model.emission_upper).re;
    if p_ss <= 0.0 {
        return Err(SimError::Degenerate("no steady-state population in the emitting level".into()));
    }
    let t_max = tau_grid.last().copied().unwrap_or(0.0);
    let traj = evolve(model, &rho, t_max.max(1e-9), DEFAULT_TOL)?;
    let g1 = first_order_surface(model, &traj, &[0.0], tau_grid)?;
    Ok(g1.values.iter().map(|g| 0.5 * (1.0 - g.norm_sqr() / (p_ss * p_ss))).collect())
}

/// Time-integrated coincidence trace of a pulse train.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HbtTrace {
    pub period: f64,
    pub n_pulses: usize,
    pub tau: Vec<f64>,
    pub values: Vec<f64>,
}

impl HbtTrace {
    fn area(&self, lo: f64, hi: f64) -> f64 {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (t, v) in self.tau.iter().zip(&self.values) {
            if *t >= lo && *t <= hi {
                xs.push(*t);
                ys.push(*v);
            }
        }
        trapezoid(&xs, &ys)
    }

    /// Area of the peak at `τ = m·T`, both sides of τ = 0 for `m = 0`.
    pub fn peak_area(&self, m: usize) -> f64 {
        let half = 0.5 * self.period;
        if m == 0 {
            2.0 * self.area(0.0, half)
        } else {
            let c = m as f64 * self.period;
            self.area(c - half, c + half)
        }
    }

    /// p34 estimated from the 0th and m-th peaks, each divided by the number
    /// of pulse pairs contributing to it.
    pub fn p34_estimate(&self, m: usize) -> f64 {
        let n = self.n_pulses as f64;
        let zero = self.peak_area(0) / n;
        let side = self.peak_area(m) / (n - m as f64);
        zero / side
    }

    /// Trace mirrored to negative delays.
    pub fn symmetric(&self) -> (Vec<f64>, Vec<f64>) {
        let mut tau: Vec<f64> = self.tau.iter().rev().filter(|t| **t > 0.0).map(|t| -t).collect();
        let mut values: Vec<f64> = self.tau.iter().zip(&self.values).rev().filter(|(t, _)| **t > 0.0).map(|(_, v)| *v).collect();
        tau.extend_from_slice(&self.tau);
        values.extend_from_slice(&self.values);
        (tau, values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HbtOptions {
    pub period: f64,
    /// Uniform t nodes per pulse period.
    pub t_points_per_period: usize,
    pub tol: f64,
}

/// Integrates `½(P(t)P(t+τ) − |G̃⁽¹⁾(t,τ)|²)` over t for a train of
/// `n_pulses` copies of the model's pulse.
///
/// The emitter must return to its initial level on its own between pulses.
pub fn hbt_trace(model: &EmitterModel, n_pulses: usize, tau_grid: &[f64], opts: &HbtOptions) -> Result<HbtTrace> {
    if n_pulses < 2 {
        return Err(SimError::param("an HBT trace needs at least two pulses"));
    }
    if !model.recycles() {
        return Err(SimError::param(
            "the emitter does not return to its initial level, so a pulse train is not periodic",
        ));
    }
    let pulse = *model
        .drive
        .pulse()
        .ok_or_else(|| SimError::param("HBT trace needs a pulsed drive"))?;
    if !(opts.period > 2.0 * GaussianPulse::LEAD_WIDTHS * pulse.width) {
        return Err(SimError::param("pulse period must exceed the pulse duration"));
    }
    if tau_grid.is_empty() || tau_grid[0] < 0.0 || tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::param("tau grid must be non-negative and strictly increasing"));
    }
    let first = GaussianPulse::new(pulse.peak_rabi, GaussianPulse::LEAD_WIDTHS * pulse.width, pulse.width)?;
    let train = model.with_drive(Drive::Train {
        pulse: first,
        period: opts.period,
        count: n_pulses,
    });
    let t_end = n_pulses as f64 * opts.period;
    let traj = evolve(&train, &train.initial_state(), t_end, opts.tol)?;

    let m = opts.t_points_per_period.max(8) * n_pulses;
    let dt = t_end / m as f64;
    let t_nodes: Vec<f64> = (0..=m).map(|i| i as f64 * dt).collect();
    let gen = train.generator();
    let (a, b) = train.coherence_operators();
    let u = train.emission_upper;
    let d = train.dim;
    let columns = par::try_map(&t_nodes, |&t| -> Result<Vec<f64>> {
        let mut col = vec![0.0; tau_grid.len()];
        let p = traj.population(u, t);
        let reach = tau_grid.partition_point(|tau| t + tau <= t_end);
        if reach == 0 || p == 0.0 {
            return Ok(col);
        }
        let times: Vec<f64> = tau_grid[..reach].iter().map(|tau| t + tau).collect();
        let x0 = b * traj.state_at(t);
        let scale = x0.max_abs();
        let x0 = x0.scale_re(1.0 / scale);
        integrate_driven_sampled(&gen, &train.drive, t, x0.as_slice(), times[reach - 1], &times, opts.tol, |k, x| {
            let g = a.trace_product(&Operator::from_slice(d, x)) * scale;
            col[k] = 0.5 * (p * traj.population(u, times[k]) - g.norm_sqr());
        })?;
        Ok(col)
    })?;
    let weights: Vec<f64> = (0..=m).map(|i| if i == 0 || i == m { 0.5 * dt } else { dt }).collect();
    let values = (0..tau_grid.len())
        .map(|k| columns.iter().zip(&weights).map(|(c, w)| w * c[k]).sum())
        .collect();
    Ok(HbtTrace {
        period: opts.period,
        n_pulses,
        tau: tau_grid.to_vec(),
        values,
    })
}

/// The full `½(P P − |G1|²)` surface of a single-shot run on explicit grids.
pub fn coincidence_surface(
    model: &EmitterModel,
    trajectory: &Trajectory,
    t_grid: &[f64],
    tau_grid: &[f64],
) -> Result<CorrelationSurface> {
    let g1 = first_order_surface(model, trajectory, t_grid, tau_grid)?;
    let pp = population_product_surface(model, trajectory, t_grid, tau_grid);
    g2_34_surface(&pp, &g1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cw_formula_examples() {
        assert_eq!(cw_g2(1.0, 0.0), 0.0);
        assert_abs_diff_eq!(cw_g2(1.0, 2f64.ln() / 2.0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(cw_g2(1.0, 1e3), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn balanced_coincidence_vanishes_for_perfect_coherence() {
        let bs = BeamSplitter::balanced();
        let p = 0.3;
        assert_abs_diff_eq!(bs.coincidence(p, p, C64::new(p, 0.0)), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bs.coincidence(p, 0.2, C64::new(0.0, 0.0)), 0.5 * p * 0.2, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn splitter_is_unitary(xi in -7.0f64..7.0, phi in -7.0f64..7.0) {
            prop_assert!(BeamSplitter::new(xi, phi).unitarity_error() < 1e-12);
        }

        #[test]
        fn four_term_matches_closed_form(
            xi in 0.0f64..std::f64::consts::PI,
            phi in -3.2f64..3.2,
            p1 in 0.0f64..1.0,
            p2 in 0.0f64..1.0,
            frac in 0.0f64..1.0,
            arg in -3.2f64..3.2,
        ) {
            let g = C64::from_polar((p1 * p2).sqrt() * frac, arg);
            let bs = BeamSplitter::new(xi, phi);
            prop_assert!((bs.coincidence_four_term(p1, p2, g) - bs.coincidence(p1, p2, g)).abs() < 1e-12);
        }
    }

    #[test]
    fn hbt_symmetric_mirror() {
        let tr = HbtTrace {
            period: 2.0,
            n_pulses: 2,
            tau: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 1.0, 2.0],
        };
        let (t, v) = tr.symmetric();
        assert_eq!(t, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(v, vec![2.0, 1.0, 0.0, 1.0, 2.0]);
    }
}
