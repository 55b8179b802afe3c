//! Analytic and independently coded references, run as a quick self-check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{evolve, first_order_surface, population_product_surface, Trajectory, DEFAULT_TOL};
use crate::error::Result;
use crate::gate::{cs_gate_network, input_search_set, run_gate, visibility, JitterModel, IDEAL_SUCCESS};
use crate::interference::{cw_g2, cw_g2_simulated, p34, BeamSplitter};
use crate::model::{build_incoherent_model, build_raman_model, incoherent, raman, EmitterModel, ModelParams};
use crate::operator::{Drive, GaussianPulse, Operator, C64};
use crate::quadrature::gauss_legendre;

/// `⟨σ₂₄(t+τ) σ₄₂(t)⟩` of the Raman emitter from the closed three-variable
/// system for `(⟨σ₂₄⟩, ⟨σ₁₄⟩, ⟨σ₃₄⟩)`, integrated with fixed-step RK4.
pub fn raman_reference_correlator(model: &EmitterModel, traj: &Trajectory, t: f64, tau: &[f64]) -> Option<Vec<C64>> {
    let ModelParams::Raman { g, kappa, gamma_spon, gamma_deph, .. } = model.params else {
        return None;
    };
    let rho = traj.state_at(t);
    let mut y = [
        rho.get(raman::L2, raman::L2),
        rho.get(raman::L2, raman::L1),
        rho.get(raman::L2, raman::L3),
    ];
    let f = |s: f64, y: &[C64; 3]| -> [C64; 3] {
        let om = model.drive.at(s);
        [
            -g * y[2] - kappa * y[0],
            -om * y[2],
            g * y[0] + om * y[1] - (0.5 * gamma_spon + gamma_deph) * y[2],
        ]
    };
    let h: f64 = 2e-4;
    let mut out = Vec::with_capacity(tau.len());
    let mut s = t;
    for &target in tau {
        let end = t + target;
        while s < end - 1e-12 {
            let dt = h.min(end - s);
            let k1 = f(s, &y);
            let y2: [C64; 3] = std::array::from_fn(|i| y[i] + 0.5 * dt * k1[i]);
            let k2 = f(s + 0.5 * dt, &y2);
            let y3: [C64; 3] = std::array::from_fn(|i| y[i] + 0.5 * dt * k2[i]);
            let k3 = f(s + 0.5 * dt, &y3);
            let y4: [C64; 3] = std::array::from_fn(|i| y[i] + dt * k3[i]);
            let k4 = f(s + dt, &y4);
            y = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
            s += dt;
        }
        out.push(y[0]);
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match run() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let a = Operator::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = a * a.dagger();
    let tr = m.trace().re;
    m.scale_re(1.0 / tr)
}

fn raman_fig9(gamma_deph: f64) -> Result<EmitterModel> {
    let pulse = GaussianPulse::starting_at_zero(6.2, 1.0)?;
    build_raman_model(1.0, 10.0, 10.0, std::f64::consts::FRAC_PI_4, gamma_deph, pulse)
}

/// Runs every reference check; each takes well under a second.
pub fn oracle_suite() -> Vec<Check> {
    vec![
        check("generator preserves trace and Hermiticity", || {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let pulse = GaussianPulse::starting_at_zero(3.0, 0.5)?;
            let models = [
                build_incoherent_model(1.0, 4.0, 30.0, 0.7, pulse)?,
                build_raman_model(1.0, 5.0, 8.0, 0.6, 0.4, pulse)?,
            ];
            let mut worst: f64 = 0.0;
            for m in &models {
                for _ in 0..20 {
                    let rho = random_density(&mut rng, m.dim);
                    let l = m.lindblad_rhs(2.9, &rho);
                    worst = worst.max(l.trace().norm()).max(l.hermiticity_error());
                }
            }
            Ok((worst <= 1e-10, format!("max |Tr L(rho)|, |L - L^dag| = {worst:.1e}")))
        }),
        check("free decay", || {
            let m = build_incoherent_model(1.0, 0.0, 0.0, 0.0, Drive::Off)?;
            let traj = evolve(&m, &Operator::basis_state(3, incoherent::E), 5.0, DEFAULT_TOL)?;
            let err = (traj.population(incoherent::E, 5.0) - (-5.0f64).exp()).abs();
            Ok((err <= 1e-7, format!("|P_e(5) - e^-5| = {err:.1e}")))
        }),
        check("coherence decay rate", || {
            let mut worst: f64 = 0.0;
            for gd in [0.0, 1.0] {
                let m = build_incoherent_model(1.0, 0.0, 0.0, gd, Drive::Off)?;
                let mut rho = Operator::zeros(3);
                for i in [incoherent::G, incoherent::E] {
                    for j in [incoherent::G, incoherent::E] {
                        rho.set(i, j, C64::new(0.5, 0.0));
                    }
                }
                let traj = evolve(&m, &rho, 2.0, DEFAULT_TOL)?;
                let c = traj.state_at(2.0).get(incoherent::E, incoherent::G).norm();
                worst = worst.max((c - 0.5 * (-(0.5 + gd) * 2.0f64).exp()).abs());
            }
            Ok((worst <= 1e-7, format!("max deviation from e^-(Gamma/2 + gamma_deph) t = {worst:.1e}")))
        }),
        check("cw coincidence oracle", || {
            let tau: Vec<f64> = (0..=200).map(|k| 0.025 * k as f64).collect();
            let mut worst: f64 = 0.0;
            for gamma in [0.5, 1.0, 2.0] {
                let m = build_incoherent_model(1.0, 0.0, 100.0, gamma - 0.5, Drive::Constant(0.01))?;
                for (t, s) in tau.iter().zip(cw_g2_simulated(&m, &tau)?) {
                    worst = worst.max((s - cw_g2(gamma, *t)).abs());
                }
            }
            Ok((worst <= 1e-3, format!("max deviation = {worst:.1e}")))
        }),
        check("Raman regression equals the three-variable system", || {
            let m = raman_fig9(0.5)?;
            let traj = evolve(&m, &m.initial_state(), 18.0, 1e-10)?;
            let t_grid = [1.0, 3.0, 5.5, 8.0];
            let tau: Vec<f64> = (0..=40).map(|k| 0.25 * k as f64).collect();
            let s = first_order_surface(&m, &traj, &t_grid, &tau)?;
            let mut worst: f64 = 0.0;
            for (i, &t) in t_grid.iter().enumerate() {
                let r = raman_reference_correlator(&m, &traj, t, &tau).expect("Raman model");
                for (k, v) in r.iter().enumerate() {
                    worst = worst.max((s.value(i, k) - v).norm());
                }
            }
            Ok((worst <= 1e-6, format!("max deviation = {worst:.1e}")))
        }),
        check("Cauchy-Schwarz bound on the first-order correlator", || {
            let m = raman_fig9(0.0)?;
            let traj = evolve(&m, &m.initial_state(), 16.0, DEFAULT_TOL)?;
            let grid: Vec<f64> = (0..16).map(|k| 0.5 * k as f64).collect();
            let g1 = first_order_surface(&m, &traj, &grid, &grid)?;
            let pp = population_product_surface(&m, &traj, &grid, &grid);
            let excess = g1
                .values
                .iter()
                .zip(&pp.values)
                .map(|(a, b)| a.norm_sqr() - b.re)
                .fold(f64::MIN, f64::max);
            Ok((excess <= 1e-8, format!("max |G1|^2 - P P = {excess:.1e}")))
        }),
        check("two-level photons interfere perfectly", || {
            let pulse = GaussianPulse::starting_at_zero(0.0, 0.01)?;
            let m = EmitterModel {
                initial_level: incoherent::E,
                ..build_incoherent_model(1.0, 0.0, 0.0, 0.0, pulse)?
            };
            let r = p34(&m)?;
            Ok((r.p34.abs() <= 1e-4, format!("p34 = {:.1e}", r.p34)))
        }),
        check("beam splitter algebra", || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let bs = BeamSplitter::new(rng.random_range(0.0..3.2), rng.random_range(0.0..6.3));
                let (p, q): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                let g = C64::from_polar((p * q).sqrt() * rng.random_range(0.0..1.0), rng.random_range(0.0..6.3));
                worst = worst
                    .max(bs.unitarity_error())
                    .max((bs.coincidence_four_term(p, q, g) - bs.coincidence(p, q, g)).abs());
            }
            Ok((worst <= 1e-12, format!("max unitarity / four-term deviation = {worst:.1e}")))
        }),
        check("ideal controlled-sign gate", || {
            let jm = JitterModel::new(0.0, 1.0)?;
            let mut dp: f64 = 0.0;
            let mut df: f64 = 0.0;
            for input in input_search_set(5, 20) {
                let post = run_gate(&input, 0.0, &jm)?;
                dp = dp.max((post.probability - IDEAL_SUCCESS).abs());
                df = df.max((post.fidelity(&input.target())? - 1.0).abs());
            }
            let u = cs_gate_network().unitarity_error();
            Ok((
                dp <= 1e-9 && df <= 1e-9 && u <= 1e-12,
                format!("max |P - 2/27| = {dp:.1e}, max |F - 1| = {df:.1e}, unitarity {u:.1e}"),
            ))
        }),
        check("jitter-averaged visibility", || {
            let mut worst: f64 = 0.0;
            for x in [1e-3, 0.1, 1.0, 5.0] {
                let jm = JitterModel::new(x, 1.0)?;
                let (e, w) = gauss_legendre(32, 0.0, x);
                let avg: f64 = e.iter().zip(&w).map(|(e, w)| w * jm.overlap(*e).powi(2)).sum::<f64>() / x;
                worst = worst.max((avg - visibility(x, 1.0)).abs());
            }
            Ok((worst <= 1e-12, format!("max quadrature deviation = {worst:.1e}")))
        }),
    ]
}
