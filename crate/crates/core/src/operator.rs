//! Dense operators on few-level Hilbert spaces.
//!
//! Every operator here lives on at most four levels, so entries are kept in a
//! fixed-size row-major array and the type is `Copy`. Level indices are
//! zero-based; `Operator::projector(dim, i, j)` is `|i⟩⟨j|`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SimError};

pub type C64 = Complex64;

/// Largest supported number of emitter levels.
pub const MAX_DIM: usize = 4;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, PartialEq)]
pub struct Operator {
    dim: usize,
    // row-major with stride `dim`; entries past dim*dim are always zero
    data: [C64; MAX_DIM * MAX_DIM],
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "operator dimension {dim} out of range");
        Operator {
            dim,
            data: [ZERO; MAX_DIM * MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.set(i, i, ONE);
        }
        op
    }

    /// The transition operator `|i⟩⟨j|`.
    pub fn projector(dim: usize, i: usize, j: usize) -> Self {
        assert!(i < dim && j < dim, "projector index out of range");
        let mut op = Self::zeros(dim);
        op.set(i, j, ONE);
        op
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                op.set(i, j, f(i, j));
            }
        }
        op
    }

    /// Builds an operator from its row-major entries (`dim * dim` values).
    pub fn from_slice(dim: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count does not match dimension");
        let mut op = Self::zeros(dim);
        op.data[..dim * dim].copy_from_slice(entries);
        op
    }

    /// Pure-state density matrix `|k⟩⟨k|`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        Self::projector(dim, k, k)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[i * self.dim + j] = value;
    }

    /// Row-major entries, `dim * dim` long.
    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data[..self.dim * self.dim]
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = *self;
        out.data.iter_mut().for_each(|z| *z *= factor);
        out
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        *self * *other - *other * *self
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - self†`.
    pub fn hermiticity_error(&self) -> f64 {
        (*self - self.dagger())
            .as_slice()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (*self + self.dagger()).scale_re(0.5);
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| h.get(i, j));
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Checks the density-matrix invariants: unit trace, Hermiticity and
    /// positivity, each to the given slack.
    pub fn check_density(&self, trace_tol: f64, herm_tol: f64, eig_tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - ONE).norm() > trace_tol {
            return Err(SimError::param(format!("density matrix trace {tr} != 1")));
        }
        let herm = self.hermiticity_error();
        if herm > herm_tol {
            return Err(SimError::param(format!("density matrix not Hermitian (error {herm:.3e})")));
        }
        let min_ev = self.hermitian_eigenvalues()[0];
        if min_ev < -eig_tol {
            return Err(SimError::param(format!("density matrix has negative eigenvalue {min_ev:.3e}")));
        }
        Ok(())
    }

    /// Density-matrix check with the library's default slack.
    pub fn validate_density(&self) -> Result<()> {
        self.check_density(1e-9, 1e-9, 1e-8)
    }

    /// `Tr[self · other]`.
    pub fn trace_product(&self, other: &Operator) -> C64 {
        debug_assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += self.get(i, k) * other.get(k, i);
            }
        }
        acc
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(mut self, rhs: Operator) -> Operator {
        debug_assert_eq!(self.dim, rhs.dim);
        self.data.iter_mut().zip(rhs.data.iter()).for_each(|(a, b)| *a += b);
        self
    }
}

impl AddAssign for Operator {
    fn add_assign(&mut self, rhs: Operator) {
        *self = *self + rhs;
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(mut self, rhs: Operator) -> Operator {
        debug_assert_eq!(self.dim, rhs.dim);
        self.data.iter_mut().zip(rhs.data.iter()).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_re(-1.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        debug_assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Operator::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }
}

impl Mul<Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Mul<Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        rhs.scale_re(self)
    }
}

/// Gaussian laser envelope `Ω(t) = peak · exp(-(t - center)² / (2 width²))`.
///
/// `width` is the standard deviation of the envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPulse {
    pub peak_rabi: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianPulse {
    /// Number of widths between t = 0 and the pulse center for pulses placed
    /// with [`GaussianPulse::starting_at_zero`].
    pub const LEAD_WIDTHS: f64 = 6.0;

    pub fn new(peak_rabi: f64, center: f64, width: f64) -> Result<Self> {
        if !peak_rabi.is_finite() || peak_rabi < 0.0 {
            return Err(SimError::param(format!("peak Rabi frequency must be >= 0, got {peak_rabi}")));
        }
        if !width.is_finite() || width <= 0.0 {
            return Err(SimError::param(format!("pulse width must be > 0, got {width}")));
        }
        if !center.is_finite() {
            return Err(SimError::param("pulse center must be finite"));
        }
        Ok(GaussianPulse {
            peak_rabi,
            center,
            width,
        })
    }

    /// A pulse whose center sits `LEAD_WIDTHS` widths after t = 0, so the
    /// envelope is negligible at the start of the simulation.
    pub fn starting_at_zero(peak_rabi: f64, width: f64) -> Result<Self> {
        Self::new(peak_rabi, Self::LEAD_WIDTHS * width, width)
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        self.peak_rabi * (-0.5 * x * x).exp()
    }

    /// Time after which the envelope is below `peak · exp(-LEAD_WIDTHS²/2)`.
    pub fn end(&self) -> f64 {
        self.center + Self::LEAD_WIDTHS * self.width
    }

    /// `∫ Ω(t) dt` over the whole real line.
    pub fn area(&self) -> f64 {
        self.peak_rabi * self.width * (2.0 * std::f64::consts::PI).sqrt()
    }

    pub fn with_peak(&self, peak_rabi: f64) -> Self {
        GaussianPulse { peak_rabi, ..*self }
    }
}

/// Time dependence of the laser coupling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Drive {
    Off,
    Constant(f64),
    Pulse(GaussianPulse),
    /// `count` copies of `pulse` spaced by `period`.
    Train {
        pulse: GaussianPulse,
        period: f64,
        count: usize,
    },
}

impl Drive {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Drive::Off => 0.0,
            Drive::Constant(omega) => *omega,
            Drive::Pulse(p) => p.at(t),
            Drive::Train { pulse, period, count } => {
                // only the nearest pulses contribute at double precision
                let k = ((t - pulse.center) / period).round();
                let mut total = 0.0;
                for dk in [-1.0, 0.0, 1.0] {
                    let idx = k + dk;
                    if idx >= 0.0 && idx < *count as f64 {
                        total += pulse.at(t - idx * period);
                    }
                }
                total
            }
        }
    }

    /// Step-size cap that keeps the integrator from stepping over a pulse.
    pub fn max_step(&self) -> f64 {
        match self {
            Drive::Off | Drive::Constant(_) => f64::INFINITY,
            Drive::Pulse(p) | Drive::Train { pulse: p, .. } => 0.5 * p.width,
        }
    }

    /// Time after which the drive is negligible (−∞ when undriven, +∞ for cw).
    pub fn end(&self) -> f64 {
        match self {
            Drive::Off => f64::NEG_INFINITY,
            Drive::Constant(_) => f64::INFINITY,
            Drive::Pulse(p) => p.end(),
            Drive::Train { pulse, period, count } => pulse.end() + period * (*count as f64 - 1.0),
        }
    }

    pub fn pulse(&self) -> Option<&GaussianPulse> {
        match self {
            Drive::Pulse(p) | Drive::Train { pulse: p, .. } => Some(p),
            _ => None,
        }
    }

    /// Replaces the peak Rabi frequency of the pulse (no-op otherwise).
    pub fn with_peak(&self, peak: f64) -> Drive {
        match *self {
            Drive::Pulse(p) => Drive::Pulse(p.with_peak(peak)),
            Drive::Train { pulse, period, count } => Drive::Train {
                pulse: pulse.with_peak(peak),
                period,
                count,
            },
            Drive::Constant(_) => Drive::Constant(peak),
            Drive::Off => Drive::Off,
        }
    }
}

/// One Lindblad channel, `rate · (J ρ J† − ½{J†J, ρ})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dissipator {
    pub rate: f64,
    pub jump: Operator,
}

impl Dissipator {
    pub fn new(rate: f64, jump: Operator) -> Self {
        Dissipator { rate, jump }
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        if self.rate == 0.0 {
            return Operator::zeros(rho.dim());
        }
        let j = self.jump;
        let jd = j.dagger();
        let jdj = jd * j;
        let jump_term = j * *rho * jd;
        let anti = jdj * *rho + *rho * jdj;
        (jump_term - anti.scale_re(0.5)).scale_re(self.rate)
    }
}
