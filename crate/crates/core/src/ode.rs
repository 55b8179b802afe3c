//! Dormand–Prince 5(4) integrator with fourth-order dense output, for complex
//! linear systems of a few dozen components.

use crate::error::{Result, SimError};
use crate::operator::C64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem {
    fn len(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[C64], &mut [C64]),
{
    fn len(&self) -> usize {
        self.0
    }
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        (self.1)(t, y, dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-8,
            atol: 1e-11,
            h_max: f64::INFINITY,
            h_init: None,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorOptions {
            rtol: tol,
            atol: tol * 1e-3,
            ..Default::default()
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

/// One accepted step together with its continuous extension.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    // five coefficient blocks of length n
    coeffs: Vec<C64>,
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn len(&self) -> usize {
        self.coeffs.len() / 5
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Interpolated state at `t` in `[t0, t0 + h]`.
    pub fn eval_into(&self, t: f64, out: &mut [C64]) {
        let n = self.len();
        let s = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        let s1 = 1.0 - s;
        let (r1, rest) = self.coeffs.split_at(n);
        let (r2, rest) = rest.split_at(n);
        let (r3, rest) = rest.split_at(n);
        let (r4, r5) = rest.split_at(n);
        for i in 0..n {
            out[i] = r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * s1) * s) * s1) * s;
        }
    }

    /// Interpolates a single component.
    pub fn eval_component(&self, t: f64, i: usize) -> C64 {
        let n = self.len();
        let s = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        let s1 = 1.0 - s;
        let c = &self.coeffs;
        c[i] + (c[n + i] + (c[2 * n + i] + (c[3 * n + i] + c[4 * n + i] * s1) * s) * s1) * s
    }
}

/// A complete dense solution on `[t_start, t_end]`.
#[derive(Clone, Debug)]
pub struct DenseSolution {
    pub n: usize,
    pub steps: Vec<DenseStep>,
    pub y_end: Vec<C64>,
}

impl DenseSolution {
    pub fn t_start(&self) -> f64 {
        self.steps.first().map(|s| s.t0).unwrap_or(0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map(|s| s.t1()).unwrap_or(0.0)
    }

    fn locate(&self, t: f64) -> &DenseStep {
        let idx = self.steps.partition_point(|s| s.t1() < t);
        &self.steps[idx.min(self.steps.len() - 1)]
    }

    pub fn eval_into(&self, t: f64, out: &mut [C64]) {
        self.locate(t).eval_into(t, out)
    }

    pub fn eval(&self, t: f64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_component(&self, t: f64, i: usize) -> C64 {
        self.locate(t).eval_component(t, i)
    }

    /// Start times of the accepted steps followed by the final time.
    pub fn step_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.steps.iter().map(|s| s.t0).collect();
        ts.push(self.t_end());
        ts
    }
}

struct Workspace {
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Workspace {
            k: std::array::from_fn(|_| z.clone()),
            y_stage: z.clone(),
            y_new: z,
        }
    }
}

fn error_norm(y0: &[C64], y1: &[C64], err: &[C64], opts: &IntegratorOptions) -> f64 {
    let n = y0.len();
    let mut acc = 0.0;
    for i in 0..n {
        let sc = opts.atol + opts.rtol * y0[i].norm().max(y1[i].norm());
        let e = err[i].norm() / sc;
        acc += e * e;
    }
    (acc / n as f64).sqrt()
}

fn initial_step<S: OdeSystem>(sys: &S, t0: f64, y0: &[C64], f0: &[C64], opts: &IntegratorOptions, dir_span: f64) -> f64 {
    let n = y0.len();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..n {
        let sc = opts.atol + opts.rtol * y0[i].norm();
        d0 += (y0[i].norm() / sc).powi(2);
        d1 += (f0[i].norm() / sc).powi(2);
    }
    d0 = (d0 / n as f64).sqrt();
    d1 = (d1 / n as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(opts.h_max).min(dir_span);
    let y1: Vec<C64> = y0.iter().zip(f0).map(|(y, f)| y + f * h0).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); n];
    sys.rhs(t0 + h0, &y1, &mut f1);
    let mut d2 = 0.0;
    for i in 0..n {
        let sc = opts.atol + opts.rtol * y0[i].norm();
        d2 += ((f1[i] - f0[i]).norm() / sc).powi(2);
    }
    d2 = (d2 / n as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max).min(dir_span)
}

/// Integrates from `t0` to `t1`, calling `on_step` for every accepted step.
/// Returns the final state.
pub fn integrate_with<S, F>(
    sys: &S,
    t0: f64,
    y0: &[C64],
    t1: f64,
    opts: &IntegratorOptions,
    mut on_step: F,
) -> Result<Vec<C64>>
where
    S: OdeSystem,
    F: FnMut(&DenseStep),
{
    let n = sys.len();
    assert_eq!(y0.len(), n, "initial state length mismatch");
    assert!(t1 >= t0, "integration runs forward in time");
    let mut y = y0.to_vec();
    // spans at rounding level carry no dynamics
    if t1 - t0 <= 1e-14 * t0.abs().max(1.0) {
        return Ok(y);
    }
    let mut ws = Workspace::new(n);
    let mut t = t0;
    sys.rhs(t, &y, &mut ws.k[0]);
    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(sys, t0, &y, &ws.k[0], opts, t1 - t0))
        .min(opts.h_max);
    let mut err_old: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;
    let mut err_buf = vec![C64::new(0.0, 0.0); n];

    while t < t1 {
        if steps >= opts.max_steps {
            return Err(SimError::TooManySteps(opts.max_steps));
        }
        let mut last = false;
        if t + h >= t1 || t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(SimError::StepSizeUnderflow { t, h });
        }
        steps += 1;

        let err = {
            let Workspace { k, y_stage, y_new } = &mut ws;
            let [k1, k2, k3, k4, k5, k6, k7] = k;
            for i in 0..n {
                y_stage[i] = y[i] + k1[i] * (h * A21);
            }
            sys.rhs(t + C2 * h, y_stage, k2);
            for i in 0..n {
                y_stage[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
            }
            sys.rhs(t + C3 * h, y_stage, k3);
            for i in 0..n {
                y_stage[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
            }
            sys.rhs(t + C4 * h, y_stage, k4);
            for i in 0..n {
                y_stage[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
            }
            sys.rhs(t + C5 * h, y_stage, k5);
            for i in 0..n {
                y_stage[i] =
                    y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
            }
            sys.rhs(t + h, y_stage, k6);
            for i in 0..n {
                y_new[i] =
                    y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
            }
            sys.rhs(t + h, y_new, k7);
            for i in 0..n {
                err_buf[i] =
                    (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            }
            error_norm(&y, y_new, &err_buf, opts)
        };

        if err <= 1.0 {
            let k = &ws.k;
            let mut coeffs = vec![C64::new(0.0, 0.0); 5 * n];
            for i in 0..n {
                let ydiff = ws.y_new[i] - y[i];
                let bspl = k[0][i] * h - ydiff;
                coeffs[i] = y[i];
                coeffs[n + i] = ydiff;
                coeffs[2 * n + i] = bspl;
                coeffs[3 * n + i] = ydiff - k[6][i] * h - bspl;
                coeffs[4 * n + i] = (k[0][i] * D1
                    + k[2][i] * D3
                    + k[3][i] * D4
                    + k[4][i] * D5
                    + k[5][i] * D6
                    + k[6][i] * D7)
                    * h;
            }
            on_step(&DenseStep { t0: t, h, coeffs });

            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ws.y_new);
            // first-same-as-last
            ws.k.swap(0, 6);

            // PI step-size control
            let err_c = err.max(1e-10);
            let mut fac = 0.9 * err_c.powf(-0.7 / 5.0) * err_old.powf(0.4 / 5.0);
            fac = fac.clamp(0.2, 10.0);
            if rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(opts.h_max);
            err_old = err_c.max(1e-4);
            rejected = false;
        } else {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.1 };
            h *= fac;
            rejected = true;
        }
    }
    Ok(y)
}

/// Integrates and keeps the full dense output.
pub fn integrate_dense<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[C64],
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<DenseSolution> {
    let mut steps = Vec::new();
    let y_end = integrate_with(sys, t0, y0, t1, opts, |s| steps.push(s.clone()))?;
    if steps.is_empty() {
        steps.push(DenseStep {
            t0,
            h: 0.0,
            coeffs: y0.iter().copied().chain(std::iter::repeat_n(C64::new(0.0, 0.0), 4 * y0.len())).collect(),
        });
    }
    Ok(DenseSolution {
        n: sys.len(),
        steps,
        y_end,
    })
}

/// Integrates and samples the solution at the given (ascending) output times,
/// which must lie in `[t0, t1]`. `sample` receives the output index and state.
pub fn integrate_sampled<S, F>(
    sys: &S,
    t0: f64,
    y0: &[C64],
    t1: f64,
    times: &[f64],
    opts: &IntegratorOptions,
    mut sample: F,
) -> Result<Vec<C64>>
where
    S: OdeSystem,
    F: FnMut(usize, &[C64]),
{
    let n = sys.len();
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let mut next = 0usize;
    while next < times.len() && times[next] <= t0 {
        sample(next, y0);
        next += 1;
    }
    let y_end = integrate_with(sys, t0, y0, t1, opts, |step| {
        let t_hi = step.t1();
        while next < times.len() && times[next] <= t_hi {
            step.eval_into(times[next], &mut buf);
            sample(next, &buf);
            next += 1;
        }
    })?;
    while next < times.len() {
        sample(next, &y_end);
        next += 1;
    }
    Ok(y_end)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_system(rate: f64) -> (usize, impl Fn(f64, &[C64], &mut [C64])) {
        (1usize, move |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = -rate * y[0])
    }

    #[test]
    fn exponential_decay_endpoint() {
        let sys = decay_system(1.0);
        let y = integrate_with(&sys, 0.0, &[C64::new(1.0, 0.0)], 5.0, &IntegratorOptions::default(), |_| {}).unwrap();
        assert!((y[0].re - (-5.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        // rotation y' = i ω y
        let omega = 3.0;
        let sys = (1usize, move |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, omega) * y[0]);
        let sol = integrate_dense(&sys, 0.0, &[C64::new(1.0, 0.0)], 4.0, &IntegratorOptions::with_tol(1e-10)).unwrap();
        assert!(sol.steps.len() > 5);
        for k in 0..200 {
            let t = 4.0 * k as f64 / 199.0;
            let exact = C64::new(0.0, omega * t).exp();
            assert!((sol.eval(t)[0] - exact).norm() < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn sampled_output_hits_requested_times() {
        let sys = decay_system(2.0);
        let times: Vec<f64> = (0..11).map(|k| k as f64 * 0.3).collect();
        let mut got = vec![0.0; times.len()];
        integrate_sampled(&sys, 0.0, &[C64::new(1.0, 0.0)], 3.0, &times, &IntegratorOptions::with_tol(1e-10), |i, y| {
            got[i] = y[0].re
        })
        .unwrap();
        for (t, v) in times.iter().zip(&got) {
            assert!((v - (-2.0 * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn respects_max_step() {
        let sys = decay_system(0.0);
        let mut hs = Vec::new();
        integrate_with(&sys, 0.0, &[C64::new(1.0, 0.0)], 1.0, &IntegratorOptions::default().with_h_max(0.05), |s| hs.push(s.h)).unwrap();
        assert!(hs.iter().all(|&h| h <= 0.05 + 1e-15));
    }

    #[test]
    fn underflow_reports_time() {
        // finite-time blow-up y' = y², y(0) = 1 → singular at t = 1
        let sys = (1usize, |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0] * y[0]);
        let opts = IntegratorOptions {
            max_steps: 100_000,
            ..IntegratorOptions::with_tol(1e-8)
        };
        let err = integrate_with(&sys, 0.0, &[C64::new(1.0, 0.0)], 2.0, &opts, |_| {}).unwrap_err();
        match err {
            SimError::StepSizeUnderflow { t, .. } => assert!((t - 1.0).abs() < 1e-2),
            SimError::TooManySteps(_) => {}
            other => panic!("unexpected error {other:?}"),
        }
    }
}
