//! Master-equation time evolution and two-time correlators via the quantum
//! regression theorem.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SimError};
use crate::model::{EmitterModel, Generator};
use crate::ode::{integrate_dense, integrate_sampled, integrate_with, DenseSolution, IntegratorOptions, OdeSystem};
use crate::operator::{Drive, GaussianPulse, Operator, C64};
use crate::par;

/// Default local error tolerance for all integrations.
pub const DEFAULT_TOL: f64 = 1e-8;

impl OdeSystem for Generator {
    fn len(&self) -> usize {
        Generator::len(self)
    }
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        self.apply(t, y, dy)
    }
}

/// Splits `[t0, t1]` into pieces where the drive is active (step cap needed)
/// or idle (no cap).
fn segments(drive: &Drive, t0: f64, t1: f64) -> Vec<(f64, f64, f64)> {
    let busy: Vec<(f64, f64)> = match drive {
        Drive::Pulse(p) => vec![(p.center - GaussianPulse::LEAD_WIDTHS * p.width, p.end())],
        Drive::Train { pulse, period, count } => (0..*count)
            .map(|k| {
                let c = pulse.center + *period * k as f64;
                (c - GaussianPulse::LEAD_WIDTHS * pulse.width, c + GaussianPulse::LEAD_WIDTHS * pulse.width)
            })
            .collect(),
        Drive::Off | Drive::Constant(_) => Vec::new(),
    };
    let cap = drive.max_step();
    let mut out = Vec::new();
    let mut t = t0;
    for (b0, b1) in busy {
        if b1 <= t || t >= t1 {
            continue;
        }
        if b0 > t {
            let e = b0.min(t1);
            out.push((t, e, f64::INFINITY));
            t = e;
        }
        if t < t1 {
            let e = b1.min(t1);
            out.push((t, e, cap));
            t = e;
        }
    }
    if t < t1 {
        out.push((t, t1, f64::INFINITY));
    }
    out
}

/// Integrates a system driven by `drive` with step caps applied inside pulses.
pub(crate) fn integrate_driven_sampled<S, F>(
    sys: &S,
    drive: &Drive,
    t0: f64,
    y0: &[C64],
    t1: f64,
    times: &[f64],
    tol: f64,
    mut sample: F,
) -> Result<Vec<C64>>
where
    S: OdeSystem,
    F: FnMut(usize, &[C64]),
{
    let mut y = y0.to_vec();
    let mut offset = 0usize;
    for (a, b, cap) in segments(drive, t0, t1) {
        let opts = IntegratorOptions::with_tol(tol).with_h_max(cap);
        let end = offset + times[offset..].partition_point(|&t| t <= b);
        let local = &times[offset..end];
        let base = offset;
        y = integrate_sampled(sys, a, &y, b, local, &opts, |i, v| sample(base + i, v))?;
        offset = end;
    }
    for i in offset..times.len() {
        sample(i, &y);
    }
    Ok(y)
}

/// Solution of the master equation with dense output.
#[derive(Clone, Debug)]
pub struct Trajectory {
    dim: usize,
    tol: f64,
    pieces: Vec<DenseSolution>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn t_start(&self) -> f64 {
        self.pieces[0].t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.pieces.last().map(|p| p.t_end()).unwrap_or(0.0)
    }

    /// Accepted integration times, strictly increasing.
    pub fn time_grid(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = Vec::new();
        for p in &self.pieces {
            for t in p.step_times() {
                if ts.last().is_none_or(|&last| t > last) {
                    ts.push(t);
                }
            }
        }
        ts
    }

    fn piece(&self, t: f64) -> &DenseSolution {
        let idx = self.pieces.partition_point(|p| p.t_end() < t);
        &self.pieces[idx.min(self.pieces.len() - 1)]
    }

    pub fn state_at(&self, t: f64) -> Operator {
        let v = self.piece(t).eval(t);
        Operator::from_slice(self.dim, &v)
    }

    pub fn final_state(&self) -> Operator {
        Operator::from_slice(self.dim, &self.pieces.last().unwrap().y_end)
    }

    /// `⟨op⟩(t) = Tr[op ρ(t)]`.
    pub fn expectation(&self, op: &Operator, t: f64) -> C64 {
        op.trace_product(&self.state_at(t))
    }

    pub fn population(&self, level: usize, t: f64) -> f64 {
        self.piece(t).eval_component(t, level * self.dim + level).re
    }

    /// `∫ ρ_kk dt` over the whole trajectory, exact for the dense interpolant
    /// up to Gauss–Legendre quadrature error per step.
    pub fn integrated_population(&self, level: usize) -> f64 {
        // 3-point Gauss–Legendre per accepted step integrates the quartic interpolant exactly
        let nodes = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
        let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let idx = level * self.dim + level;
        let mut total = 0.0;
        for p in &self.pieces {
            for s in &p.steps {
                let half = 0.5 * s.h;
                let mid = s.t0 + half;
                for (x, w) in nodes.iter().zip(weights) {
                    total += w * half * s.eval_component(mid + half * x, idx).re;
                }
            }
        }
        total
    }

    /// Largest |Tr ρ − 1| over the accepted step times.
    pub fn max_trace_drift(&self) -> f64 {
        self.time_grid()
            .into_iter()
            .map(|t| (self.state_at(t).trace() - C64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }
}

/// Evolves `rho0` from t = 0 to `t_end` under the model's master equation.
pub fn evolve(model: &EmitterModel, rho0: &Operator, t_end: f64, tol: f64) -> Result<Trajectory> {
    evolve_from(model, 0.0, rho0, t_end, tol)
}

pub fn evolve_from(model: &EmitterModel, t0: f64, rho0: &Operator, t_end: f64, tol: f64) -> Result<Trajectory> {
    if rho0.dim() != model.dim {
        return Err(SimError::param("initial state dimension does not match the model"));
    }
    rho0.validate_density()?;
    if !(t_end > t0) {
        return Err(SimError::param(format!("t_end must exceed the start time, got {t_end}")));
    }
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(SimError::param(format!("tolerance must lie in (0, 1e-2), got {tol}")));
    }
    let gen = model.generator();
    let mut pieces = Vec::new();
    let mut y = rho0.as_slice().to_vec();
    for (a, b, cap) in segments(&model.drive, t0, t_end) {
        let opts = IntegratorOptions::with_tol(tol).with_h_max(cap);
        let sol = integrate_dense(&gen, a, &y, b, &opts)?;
        y = sol.y_end.clone();
        pieces.push(sol);
    }
    Ok(Trajectory {
        dim: model.dim,
        tol,
        pieces,
    })
}

/// Evolves the model from its initial level through one excitation, extending
/// the window until the transient levels have emptied (population below
/// `residual`) after the drive has ended.
pub fn evolve_single_shot(model: &EmitterModel, tol: f64, residual: f64) -> Result<Trajectory> {
    let life = model.emission_lifetime();
    let drive_end = model.drive.end().max(0.0);
    if !drive_end.is_finite() {
        return Err(SimError::param("single-shot evolution needs a pulsed or absent drive"));
    }
    let mut t_end = drive_end + 20.0 * life;
    let rho0 = model.initial_state();
    for _ in 0..12 {
        let traj = evolve(model, &rho0, t_end, tol)?;
        let rho = traj.final_state();
        let left: f64 = model.transient_levels.iter().map(|&k| rho.get(k, k).re).sum();
        if left <= residual {
            return Ok(traj);
        }
        t_end = drive_end + 2.0 * (t_end - drive_end);
    }
    Err(SimError::Window(format!(
        "transient population still above {residual:.1e} at t = {t_end:.3e}"
    )))
}

/// Steady state of a time-independent generator (no drive or cw drive).
pub fn steady_state(model: &EmitterModel) -> Result<Operator> {
    if matches!(model.drive, Drive::Pulse(_) | Drive::Train { .. }) {
        return Err(SimError::param("steady state requires a time-independent drive"));
    }
    let gen = model.generator();
    let n = gen.len();
    let d = model.dim;
    let dense = gen.dense_at(0.0);
    let mut m = DMatrix::from_fn(n, n, |r, c| dense[r * n + c]);
    let mut rhs = DVector::from_element(n, C64::new(0.0, 0.0));
    // replace the first equation by the trace condition
    for c in 0..n {
        m[(0, c)] = if c % (d + 1) == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    rhs[0] = C64::new(1.0, 0.0);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SimError::Degenerate("steady state is not unique".into()))?;
    let rho = Operator::from_slice(d, sol.as_slice());
    Ok((rho + rho.dagger()).scale_re(0.5))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    /// `⟨σ_ul(t+τ) σ_lu(t)⟩`.
    FirstOrder,
    /// `⟨σ_uu(t)⟩⟨σ_uu(t+τ)⟩`.
    PopulationProduct,
    /// Unnormalized coincidence surface at the beam-splitter outputs.
    G2Surface,
    /// Any other `⟨A(t+τ) B(t)⟩`.
    Generic,
}

/// A two-time function sampled on a rectangular (t, τ) grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSurface {
    pub t_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    /// Row-major: `values[i * tau_grid.len() + k]` is the value at `(t_i, τ_k)`.
    pub values: Vec<C64>,
    pub kind: SurfaceKind,
}

impl CorrelationSurface {
    pub fn value(&self, i: usize, k: usize) -> C64 {
        self.values[i * self.tau_grid.len() + k]
    }

    pub fn column(&self, i: usize) -> &[C64] {
        let m = self.tau_grid.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn same_grid(&self, other: &CorrelationSurface) -> bool {
        self.t_grid == other.t_grid && self.tau_grid == other.tau_grid
    }

    pub fn max_abs_diff(&self, other: &CorrelationSurface) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(SimError::param(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(SimError::param(format!("{name} grid must be finite and strictly increasing")));
    }
    Ok(())
}

/// Propagates `X(τ)` from `X(0) = B ρ(t)` and records `Tr[A X(τ)]` on the τ grid.
fn regression_column(
    gen: &Generator,
    traj: &Trajectory,
    a: &Operator,
    b: &Operator,
    t: f64,
    tau_grid: &[f64],
    tol: f64,
) -> Result<Vec<C64>> {
    let x0 = *b * traj.state_at(t);
    let scale = x0.max_abs();
    let mut col = vec![C64::new(0.0, 0.0); tau_grid.len()];
    if scale == 0.0 {
        return Ok(col);
    }
    let x0 = x0.scale_re(1.0 / scale);
    let times: Vec<f64> = tau_grid.iter().map(|tau| t + tau).collect();
    let d = traj.dim();
    integrate_driven_sampled(gen, gen.drive(), t, x0.as_slice(), *times.last().unwrap(), &times, tol, |k, x| {
        col[k] = a.trace_product(&Operator::from_slice(d, x)) * scale;
    })?;
    Ok(col)
}

/// `G(t, τ) = ⟨A(t+τ) B(t)⟩` on the given grids.
///
/// Each column propagates `B ρ(t)` under the same time-dependent generator
/// that produced the trajectory, evaluated at absolute time `t + τ`.
pub fn regression_correlator(
    model: &EmitterModel,
    trajectory: &Trajectory,
    a: &Operator,
    b: &Operator,
    t_grid: &[f64],
    tau_grid: &[f64],
) -> Result<CorrelationSurface> {
    check_grid("t", t_grid)?;
    check_grid("tau", tau_grid)?;
    if tau_grid[0] < 0.0 {
        return Err(SimError::param("tau grid must be non-negative"));
    }
    let (t_lo, t_hi) = (trajectory.t_start(), trajectory.t_end());
    let reach = t_grid.last().unwrap() + tau_grid.last().unwrap();
    if t_grid[0] < t_lo || reach > t_hi * (1.0 + 1e-12) {
        return Err(SimError::param(format!(
            "grids reach [{:.4e}, {reach:.4e}] outside the trajectory span [{t_lo:.4e}, {t_hi:.4e}]",
            t_grid[0]
        )));
    }
    let gen = model.generator();
    let tol = trajectory.tol();
    let columns = par::try_map(t_grid, |&t| regression_column(&gen, trajectory, a, b, t, tau_grid, tol))?;
    let (u, l) = model.emission_pair;
    let kind = if *a == Operator::projector(model.dim, u, l) && *b == Operator::projector(model.dim, l, u) {
        SurfaceKind::FirstOrder
    } else {
        SurfaceKind::Generic
    };
    Ok(CorrelationSurface {
        t_grid: t_grid.to_vec(),
        tau_grid: tau_grid.to_vec(),
        values: columns.into_iter().flatten().collect(),
        kind,
    })
}

/// The model's first-order coherence surface `G̃⁽¹⁾(t, τ)`.
pub fn first_order_surface(
    model: &EmitterModel,
    trajectory: &Trajectory,
    t_grid: &[f64],
    tau_grid: &[f64],
) -> Result<CorrelationSurface> {
    let (a, b) = model.coherence_operators();
    regression_correlator(model, trajectory, &a, &b, t_grid, tau_grid)
}

/// `⟨σ_uu(t)⟩⟨σ_uu(t+τ)⟩` on the given grids.
pub fn population_product_surface(
    model: &EmitterModel,
    trajectory: &Trajectory,
    t_grid: &[f64],
    tau_grid: &[f64],
) -> CorrelationSurface {
    let u = model.emission_upper;
    let mut values = Vec::with_capacity(t_grid.len() * tau_grid.len());
    for &t in t_grid {
        let p = trajectory.population(u, t);
        for &tau in tau_grid {
            let s = t + tau;
            let q = if s <= trajectory.t_end() { trajectory.population(u, s) } else { 0.0 };
            values.push(C64::new(p * q, 0.0));
        }
    }
    CorrelationSurface {
        t_grid: t_grid.to_vec(),
        tau_grid: tau_grid.to_vec(),
        values,
        kind: SurfaceKind::PopulationProduct,
    }
}

/// τ-integrals `(∫ P(t+τ) dτ, ∫ |G̃⁽¹⁾(t,τ)|² dτ)` over `[0, t_end − t]`,
/// with the quadratures carried as extra ODE components.
pub(crate) fn tau_integrals(
    model: &EmitterModel,
    gen: &Generator,
    traj: &Trajectory,
    t: f64,
    t_end: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if t >= t_end {
        return Ok((0.0, 0.0));
    }
    let (a, b) = model.coherence_operators();
    let x0 = b * traj.state_at(t);
    let scale = x0.max_abs();
    let n = gen.len();
    let d = model.dim;
    let u = model.emission_upper;
    let (ai, aj) = model.emission_pair;
    // Tr[A X] for A = |u⟩⟨l| is X[l, u]
    let g_index = aj * d + ai;
    debug_assert_eq!(a, Operator::projector(d, ai, aj));

    struct Augmented<'a> {
        gen: &'a Generator,
        traj: &'a Trajectory,
        n: usize,
        pop_index: usize,
        g_index: usize,
    }
    impl OdeSystem for Augmented<'_> {
        fn len(&self) -> usize {
            self.n + 2
        }
        fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
            self.gen.apply(t, &y[..self.n], &mut dy[..self.n]);
            let p = self.traj.piece(t).eval_component(t, self.pop_index).re;
            dy[self.n] = C64::new(p, 0.0);
            dy[self.n + 1] = C64::new(y[self.g_index].norm_sqr(), 0.0);
        }
    }
    let sys = Augmented {
        gen,
        traj,
        n,
        pop_index: u * d + u,
        g_index,
    };
    let mut y0 = vec![C64::new(0.0, 0.0); n + 2];
    if scale > 0.0 {
        for (dst, src) in y0.iter_mut().zip(x0.as_slice()) {
            *dst = src / scale;
        }
    }
    // quadrature components get a loose relative weight through their magnitude
    let mut y = y0;
    for (a0, b0, cap) in segments(&model.drive, t, t_end) {
        let opts = IntegratorOptions::with_tol(tol).with_h_max(cap);
        y = integrate_with(&sys, a0, &y, b0, &opts, |_| {})?;
    }
    Ok((y[n].re, y[n + 1].re * scale * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_incoherent_model, incoherent};

    #[test]
    fn segments_cover_interval() {
        let p = GaussianPulse::new(1.0, 5.0, 0.5).unwrap();
        let segs = segments(&Drive::Pulse(p), 0.0, 20.0);
        assert_eq!(segs.first().unwrap().0, 0.0);
        assert_eq!(segs.last().unwrap().1, 20.0);
        for w in segs.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert!(segs.iter().any(|s| s.2 == 0.25));
    }

    #[test]
    fn steady_state_of_cw_pumped_dot_is_valid() {
        let m = build_incoherent_model(1.0, 0.0, 50.0, 0.3, Drive::Constant(2.0)).unwrap();
        let rho = steady_state(&m).unwrap();
        rho.validate_density().unwrap();
        assert!(m.lindblad_rhs(0.0, &rho).max_abs() < 1e-12);
        assert!(rho.get(incoherent::E, incoherent::E).re > 0.0);
    }

    #[test]
    fn evolve_rejects_bad_input() {
        let m = build_incoherent_model(1.0, 0.0, 0.0, 0.0, Drive::Off).unwrap();
        assert!(evolve(&m, &Operator::basis_state(3, 1), -1.0, 1e-8).is_err());
        assert!(evolve(&m, &Operator::basis_state(3, 1).scale_re(2.0), 1.0, 1e-8).is_err());
    }

    #[test]
    fn regression_grid_out_of_range() {
        let m = build_incoherent_model(1.0, 0.0, 0.0, 0.0, Drive::Off).unwrap();
        let traj = evolve(&m, &Operator::basis_state(3, 1), 2.0, 1e-8).unwrap();
        let (a, b) = m.coherence_operators();
        assert!(regression_correlator(&m, &traj, &a, &b, &[0.0, 1.0], &[0.0, 1.5]).is_err());
        assert!(regression_correlator(&m, &traj, &a, &b, &[0.0, 1.0], &[0.0, 1.0]).is_ok());
    }
}
