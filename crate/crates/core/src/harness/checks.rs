//! Built-in invariant suite behind the `check` command. Each check is
//! small enough to run in well under a second.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::fourier::fourier_project;
use super::planar::{embed_planar, planar_period, planar_samples, PlanarField};
use crate::charflow::{compose_check, evolve, CharflowConfig, NonlinearityO2};
use crate::error::Result;
use crate::functional::{BoundaryCondition, ScalarField};
use crate::lagrangian::{LagrangianEvaluator, LagrangianForm};
use crate::matano::integrability_defect;
use crate::ode::Tolerances;
use crate::pde::GeneralNonlinearity;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, measured: Result<f64>, limit: f64) -> CheckResult {
    match measured {
        Ok(v) => CheckResult {
            name,
            passed: v <= limit,
            detail: format!("{v:.3e} (limit {limit:.0e})"),
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn classical_reduction() -> Result<f64> {
    let lambda = 15.0;
    let e = LagrangianEvaluator::with_defaults(NonlinearityO2::chafee_infante(lambda), LagrangianForm::Reduced);
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let (u, p) = (-2.0 + i as f64, -3.0 + 1.5 * j as f64);
            let exact = 0.5 * p * p - lambda * (0.5 * u * u - 0.25 * u.powi(4));
            worst = worst.max((e.value(u, p)? - exact).abs());
        }
    }
    Ok(worst)
}

fn form_equivalence() -> Result<f64> {
    let nl = NonlinearityO2::chafee_infante_coupled(2.0, 0.5);
    let reduced = LagrangianEvaluator::with_defaults(nl, LagrangianForm::Reduced);
    let double = reduced.with_form(LagrangianForm::DoubleIntegral);
    let mut worst: f64 = 0.0;
    for &(u, p) in &[(-1.0, 1.5), (0.5, -2.0), (1.2, 0.7)] {
        let (a, b) = (reduced.value(u, p)?, double.value(u, p)?);
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}

fn identities() -> Result<f64> {
    let e = LagrangianEvaluator::with_defaults(NonlinearityO2::chafee_infante_coupled(2.0, 0.5), LagrangianForm::Reduced);
    let mut worst: f64 = 0.0;
    for &(u, q) in &[(-1.0, 0.2), (0.4, 1.0), (1.1, 0.0)] {
        worst = worst.max((e.metric_exponent(u, q)?.exp() - e.basepoint_sensitivity(u, q)?).abs());
        worst = worst.max((e.potential(u)? - e.basepoint_value(u, 0.0)?).abs());
    }
    Ok(worst)
}

fn composition() -> Result<f64> {
    let nl = NonlinearityO2::chafee_infante_coupled(2.0, 0.5);
    let cfg = CharflowConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (u0, u1, u2): (f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let q0: f64 = rng.gen_range(0.0..1.0);
        let (two, direct) = compose_check(&nl, u0, u1, u2, q0, &cfg)?;
        worst = worst.max((two - direct).abs() / direct.abs().max(1.0));
        let back = evolve(&nl, u1, u0, evolve(&nl, u0, u1, q0, &cfg)?.value, &cfg)?.value;
        worst = worst.max((back - q0).abs() / q0.abs().max(1.0));
    }
    Ok(worst)
}

fn planar_energy() -> Result<f64> {
    let pf = PlanarField::center();
    let tol = Tolerances {
        rel: 1e-12,
        abs: 1e-14,
        max_steps: 1_000_000,
    };
    let start = (0.2, 1.1);
    let period = planar_period(&pf, start, 100.0, &tol)?;
    let times: Vec<f64> = (1..=20).map(|k| period * k as f64 / 20.0).collect();
    let h = |a: f64, b: f64| 0.5 * a * a + 0.25 * b * b - 0.5 * b.ln();
    let h0 = h(start.0, start.1);
    let orbit = planar_samples(&pf, start, &times, &tol)?;
    let drift = orbit.iter().map(|&(a, b)| (h(a, b) - h0).abs()).fold(0.0, f64::max);
    let end = orbit.last().copied().unwrap_or(start);
    Ok(drift.max((end.0 - start.0).abs()).max((end.1 - start.1).abs()))
}

fn embedding_symmetry() -> Result<f64> {
    let f = embed_planar(&PlanarField::center())?;
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (x, u, p) = (0.3 * i as f64, 0.7 - 0.05 * i as f64, -1.0 + 0.1 * i as f64);
        worst = worst.max((f.f(-x, u, -p) - f.f(x, u, p)).abs());
    }
    Ok(worst)
}

fn defect() -> Result<f64> {
    let eps = 0.3;
    let w2 = (2.0 * PI).powi(2);
    let nl = GeneralNonlinearity::new("linear centre", move |_, u, p| w2 * u + eps * p, move |_, _, _| eps, true);
    Ok((integrability_defect(&nl, (0.1, 0.2), &CharflowConfig::default())? - eps).abs())
}

fn projection() -> Result<f64> {
    let u = ScalarField::from_fn(64, 2.0 * PI, BoundaryCondition::Periodic, |x| 2.0 * x.sin() + (2.0 * x).cos())?;
    let (a1, b1) = fourier_project(&u, 1)?;
    let (a2, b2) = fourier_project(&u, 2)?;
    Ok(a1.abs().max((b1 - 2.0).abs()).max((a2 - 1.0).abs()).max(b2.abs()))
}

/// Run the suite; every entry reports pass or fail with the measured value.
pub fn run_checks() -> Vec<CheckResult> {
    vec![
        check("classical reduction", classical_reduction(), 1e-8),
        check("double/reduced forms agree", form_equivalence(), 1e-6),
        check("exp F_q = Ψ_q and F = Ψ(0)", identities(), 1e-6),
        check("composition and inverse", composition(), 1e-8),
        check("planar centre energy and closure", planar_energy(), 1e-8),
        check("embedding reflection symmetry", embedding_symmetry(), 1e-12),
        check("integrability defect = ε", defect(), 1e-6),
        check("Fourier projection", projection(), 1e-12),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for r in run_checks() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
