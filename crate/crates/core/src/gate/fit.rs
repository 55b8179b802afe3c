//! Quadratic-over-quadratic fits of the fidelity as a function of visibility.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Result, SimError};

/// `(c₀ + c₁V + c₂V²) / (d₀ + d₁V + d₂V²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RationalFit {
    pub numerator: [f64; 3],
    pub denominator: [f64; 3],
    pub max_residual: f64,
}

impl RationalFit {
    pub fn eval(&self, v: f64) -> f64 {
        let p = |c: &[f64; 3]| c[0] + v * (c[1] + v * c[2]);
        p(&self.numerator) / p(&self.denominator)
    }
}

/// Linearized least squares: minimizes `|N(V) − F·D(V)|` over unit coefficient vectors.
pub fn fit_rational(v: &[f64], f: &[f64]) -> Result<RationalFit> {
    if v.len() != f.len() {
        return Err(SimError::param("abscissae and values differ in length"));
    }
    if v.len() < 6 {
        return Err(SimError::Degenerate("a rational fit needs at least six points".into()));
    }
    let rows = v.len();
    let a = DMatrix::from_fn(rows, 6, |i, j| {
        let p = v[i].powi((j % 3) as i32);
        if j < 3 {
            p
        } else {
            -f[i] * p
        }
    });
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("six singular values");
    let x = v_t.row(k);
    let mut fit = RationalFit {
        numerator: [x[0], x[1], x[2]],
        denominator: [x[3], x[4], x[5]],
        max_residual: 0.0,
    };
    let scale = fit.denominator.iter().map(|d| d.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(SimError::Degenerate("fitted denominator vanishes".into()));
    }
    let s = fit.denominator[0].signum() / scale;
    let s = if s == 0.0 { 1.0 / scale } else { s };
    fit.numerator = fit.numerator.map(|c| c * s);
    fit.denominator = fit.denominator.map(|c| c * s);
    fit.max_residual = v
        .iter()
        .zip(f)
        .map(|(&vi, &fi)| (fit.eval(vi) - fi).abs())
        .fold(0.0, f64::max);
    if !fit.max_residual.is_finite() {
        return Err(SimError::Degenerate("fitted denominator has a pole on the data".into()));
    }
    Ok(fit)
}
