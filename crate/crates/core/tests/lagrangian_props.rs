mod common;

use common::{central4, mixed4, second, tight};
use o2lyap::charflow::NonlinearityO2;
use o2lyap::lagrangian::{LagrangianEvaluator, LagrangianForm};
use o2lyap::quadrature::QuadratureConfig;
use proptest::prelude::*;

fn evaluator(i: usize) -> LagrangianEvaluator {
    LagrangianEvaluator::with_defaults(common::nonlinearities().swap_remove(i), LagrangianForm::Reduced)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn forms_agree(i in 0usize..5, u in -2.0..2.0f64, p in -3.0..3.0f64) {
        let r = evaluator(i);
        let d = r.with_form(LagrangianForm::DoubleIntegral);
        let (a, b) = (r.value(u, p).unwrap(), d.value(u, p).unwrap());
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn even_in_p(i in 0usize..5, u in -2.0..2.0f64, p in -3.0..3.0f64) {
        for form in [LagrangianForm::Reduced, LagrangianForm::DoubleIntegral] {
            let e = evaluator(i).with_form(form);
            prop_assert_eq!(e.value(u, p).unwrap(), e.value(u, -p).unwrap());
        }
    }

    #[test]
    fn second_difference_is_convexity(i in 0usize..5, u in -1.5..1.5f64, p in -2.5..2.5f64) {
        let e = evaluator(i);
        let h = 1e-3;
        let fd = second(|q| e.value(u, q), p, h).unwrap();
        let lpp = e.convexity(u, p).unwrap();
        prop_assert!(lpp > 0.0);
        prop_assert!((fd - lpp).abs() <= 1e-3 * lpp, "{} vs {}", fd, lpp);
    }

    #[test]
    fn classical_lagrangian_recovered(lambda in 0.5..20.0f64, u in -2.0..2.0f64, p in -3.0..3.0f64) {
        let e = LagrangianEvaluator::with_defaults(NonlinearityO2::chafee_infante(lambda), LagrangianForm::Reduced);
        let exact = 0.5 * p * p - lambda * (0.5 * u * u - 0.25 * u.powi(4));
        prop_assert!((e.value(u, p).unwrap() - exact).abs() <= 1e-8);
    }
}

/// `L_u - p L_up + f̄(u, p²/2) L_pp` by central differences.
fn euler_lagrange_residual(e: &LagrangianEvaluator, u: f64, p: f64) -> f64 {
    let h = 1e-2;
    let lu = central4(|v| e.value(v, p), u, h).unwrap();
    let lup = mixed4(|v, q| e.value(v, q), u, p, h).unwrap();
    let lpp = e.convexity(u, p).unwrap();
    lu - p * lup + e.nonlinearity().f_bar(u, 0.5 * p * p) * lpp
}

#[test]
fn euler_lagrange_equation_holds() {
    for nl in common::nonlinearities() {
        let label = nl.label().to_string();
        let e = LagrangianEvaluator::new(nl, tight(), QuadratureConfig::default(), LagrangianForm::Reduced).unwrap();
        for u in [-1.2, -0.3, 0.0, 0.7, 1.4] {
            for p in [-2.0, -0.5, 0.4, 1.7] {
                let r = euler_lagrange_residual(&e, u, p);
                assert!(r.abs() <= 1e-4, "{label} at ({u}, {p}): {r:e}");
            }
        }
    }
}

#[test]
fn residual_detects_wrong_nonlinearity() {
    // L built for one f̄ does not satisfy the equation of another.
    let e = LagrangianEvaluator::new(
        NonlinearityO2::chafee_infante_coupled(15.0, 1.0),
        tight(),
        QuadratureConfig::default(),
        LagrangianForm::Reduced,
    )
    .unwrap();
    let h = 1e-2;
    let (u, p) = (0.5, 1.0);
    let lu = central4(|v| e.value(v, p), u, h).unwrap();
    let lup = mixed4(|v, q| e.value(v, q), u, p, h).unwrap();
    let wrong = NonlinearityO2::chafee_infante(15.0).f_bar(u, 0.5 * p * p);
    let r = lu - p * lup + wrong * e.convexity(u, p).unwrap();
    assert!(r.abs() > 1e-2, "{r:e}");
}

#[test]
fn coupled_convexity_has_closed_form_at_zero_gradient() {
    // For f̄ = λu(1-u²) + c q u the transport equals c u²/2 along q = 0 only
    // when λ = 0; check that limiting case.
    let c = 1.3;
    let e = LagrangianEvaluator::with_defaults(NonlinearityO2::chafee_infante_coupled(0.0, c), LagrangianForm::Reduced);
    for u in [-1.5, -0.4, 0.9] {
        let expected = (0.5 * c * u * u).exp();
        assert!((e.convexity(u, 0.0).unwrap() - expected).abs() <= 1e-9 * expected);
    }
}
