mod common;

use std::f64::consts::PI;

use common::{central, mixed, tight};
use o2lyap::charflow::{CharflowConfig, NonlinearityO2};
use o2lyap::lagrangian::{LagrangianEvaluator, LagrangianForm};
use o2lyap::matano::{integrability_defect, locate_periodic_orbit, trace_characteristic, CharacteristicState, SeparatedLagrangian};
use o2lyap::pde::GeneralNonlinearity;
use o2lyap::quadrature::QuadratureConfig;
use proptest::prelude::*;

fn cubic_plus_advection(lambda: f64, eps: f64) -> GeneralNonlinearity {
    GeneralNonlinearity::new(
        "cubic+eps p",
        move |_, u, p| lambda * u * (1.0 - u * u) + eps * p,
        move |_, _, _| eps,
        false,
    )
}

/// A nonlinearity depending on `x` as well, to exercise `L_x`.
fn x_dependent() -> GeneralNonlinearity {
    GeneralNonlinearity::new(
        "x-dependent",
        |x, u, p| (1.0 + 0.5 * (2.0 * PI * x).sin()) * u + 0.3 * p * p * u,
        |_, u, p| 0.6 * p * u,
        false,
    )
}

fn residual(nl: &GeneralNonlinearity, x: f64, u: f64, p: f64) -> f64 {
    let l = SeparatedLagrangian::new(nl.clone(), tight(), QuadratureConfig::default()).unwrap();
    let h = 1e-3;
    let lu = central(|v| l.value(x, v, p), u, h).unwrap();
    let lxp = mixed(|y, q| l.value(y, u, q), x, p, h).unwrap();
    let lup = mixed(|v, q| l.value(x, v, q), u, p, h).unwrap();
    lu - lxp - p * lup + nl.f(x, u, p) * l.convexity(x, u, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn defining_equation_holds(x in 0.1..0.9f64, u in -0.8..0.8f64, p in -1.5..1.5f64) {
        for nl in [cubic_plus_advection(5.0, 0.5), x_dependent()] {
            let r = residual(&nl, x, u, p);
            prop_assert!(r.abs() <= 1e-4, "{}: {:e}", nl.label(), r);
        }
    }
}

#[test]
fn gradient_independent_case_is_classical_everywhere() {
    let nl = NonlinearityO2::chafee_infante(5.0);
    let sep = SeparatedLagrangian::new(GeneralNonlinearity::from_o2(&nl), CharflowConfig::default(), QuadratureConfig::default()).unwrap();
    let o2 = LagrangianEvaluator::with_defaults(nl, LagrangianForm::Reduced);
    for (u, p) in [(-0.7, 1.1), (0.2, -0.4), (0.9, 2.0)] {
        let base = sep.value(0.0, u, p).unwrap();
        for x in [0.25, 0.5, 0.9] {
            assert!((sep.value(x, u, p).unwrap() - base).abs() <= 1e-8);
        }
        assert!((base - o2.value(u, p).unwrap()).abs() <= 1e-8);
    }
}

#[test]
fn exponent_differs_from_o2_exponent_by_a_first_integral() {
    // Both exponents grow by ∫ f_p along characteristics, so g equals
    // F_q(u, p²/2) minus F_q at the point where the characteristic meets x = 0.
    let nl = NonlinearityO2::chafee_infante_coupled(2.0, 1.0);
    let f = GeneralNonlinearity::from_o2(&nl);
    let cfg = tight();
    let sep = SeparatedLagrangian::new(f.clone(), cfg, QuadratureConfig::default()).unwrap();
    let o2 = LagrangianEvaluator::new(nl, cfg, QuadratureConfig::default(), LagrangianForm::Reduced).unwrap();
    let mut spread: f64 = 0.0;
    for (x, u, p) in [(0.3, 0.5, 1.0), (0.7, 0.5, 1.0), (0.5, -0.4, 0.6), (0.9, 0.2, -1.3)] {
        let base = trace_characteristic(&f, CharacteristicState { x, u, p, g: 0.0 }, 0.0, &cfg).unwrap();
        let expected = o2.metric_exponent(u, 0.5 * p * p).unwrap() - o2.metric_exponent(base.u, 0.5 * base.p * base.p).unwrap();
        let g = sep.g(x, u, p).unwrap();
        assert!((g - expected).abs() <= 1e-8, "{g} vs {expected}");
        if (u, p) == (0.5, 1.0) {
            spread = spread.max(g.abs());
        }
    }
    // The normalization g(0, ·) = 0 makes g depend on x here.
    assert!(spread > 1e-2);
}

#[test]
fn symmetric_orbits_have_no_defect() {
    // f̄ = ω²u + q u has nonconstant 1-periodic characteristics for ω < 2π;
    // along them ∫ p f̄_q dx = ∫ p u dx vanishes.
    let w2 = (2.0 * PI * 0.95).powi(2);
    let nl = NonlinearityO2::new("centre", move |u, q| w2 * u + q * u, |u, _| u);
    let f = GeneralNonlinearity::from_o2(&nl);
    let cfg = CharflowConfig::default();
    let (u0, p0) = locate_periodic_orbit(&f, (0.5, 0.0), &cfg).unwrap();
    assert!(u0.hypot(p0) > 0.5, "trivial orbit ({u0}, {p0})");
    assert!(integrability_defect(&f, (0.5, 0.0), &cfg).unwrap().abs() <= 1e-8);

    // With ε p the only 1-periodic characteristic left is the rest point,
    // where the defect is ε.
    let eps = 0.2;
    let broken = GeneralNonlinearity::new(
        "centre+eps p",
        move |_, u, p| w2 * u + 0.5 * p * p * u + eps * p,
        move |_, u, p| p * u + eps,
        true,
    );
    let d = integrability_defect(&broken, (0.05, 0.0), &cfg).unwrap();
    assert!((d - eps).abs() <= 1e-6, "{d}");
}
