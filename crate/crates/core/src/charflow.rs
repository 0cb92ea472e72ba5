//! Evolution of the characteristic equation `dq/du = -f̄(u, q)`.
//!
//! `Ψ^{u1,u0}(q0)` denotes the value at `u1` of the solution through
//! `(u0, q0)`. Its derivative with respect to `q0` solves the variational
//! equation `dη/du = -f̄_q(u, q) η`, `η(u0) = 1`, and is co-integrated with
//! the characteristic. A third component accumulates `∫_{u0}^{u} f̄_q`
//! along the same curve; the Lagrangian uses it for the metric exponent.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Control, Tolerances};

pub type ScalarFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Reflection-symmetric nonlinearity `f(u, p) = f̄(u, p²/2)` together with
/// its partial derivative in the second argument.
#[derive(Clone)]
pub struct NonlinearityO2 {
    label: String,
    f_bar: ScalarFn2,
    f_bar_q: ScalarFn2,
}

impl fmt::Debug for NonlinearityO2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearityO2").field("label", &self.label).finish_non_exhaustive()
    }
}

impl NonlinearityO2 {
    pub fn new<F, Fq>(label: impl Into<String>, f_bar: F, f_bar_q: Fq) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        Fq: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            f_bar: Arc::new(f_bar),
            f_bar_q: Arc::new(f_bar_q),
        }
    }

    /// A nonlinearity that does not depend on the gradient.
    pub fn q_independent<F>(label: impl Into<String>, f0: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(label, move |u, _| f0(u), |_, _| 0.0)
    }

    pub fn zero() -> Self {
        Self::new("zero", |_, _| 0.0, |_, _| 0.0)
    }

    /// `f̄(u, q) = b q`.
    pub fn linear_in_q(b: f64) -> Self {
        Self::new(format!("linear-q(b={b})"), move |_, q| b * q, move |_, _| b)
    }

    /// Chafee–Infante cubic `λ u (1 - u²)`, independent of the gradient.
    pub fn chafee_infante(lambda: f64) -> Self {
        Self::q_independent(format!("chafee-infante(lambda={lambda})"), move |u| lambda * u * (1.0 - u * u))
    }

    /// `λ u (1 - u²) + c q u`.
    pub fn chafee_infante_coupled(lambda: f64, c: f64) -> Self {
        Self::new(
            format!("chafee-infante-coupled(lambda={lambda},c={c})"),
            move |u, q| lambda * u * (1.0 - u * u) + c * q * u,
            move |u, _| c * u,
        )
    }

    /// `a·u + b q`: the quadratic-gradient family with linear `a(u)`.
    pub fn gradient_quadratic(a: f64, b: f64) -> Self {
        Self::new(
            format!("gradient-quadratic(a={a},b={b})"),
            move |u, q| a * u + b * q,
            move |_, _| b,
        )
    }

    /// `-u + β tanh(q)`: bounded, genuinely nonlinear gradient dependence.
    pub fn saturating(beta: f64) -> Self {
        Self::new(
            format!("saturating(beta={beta})"),
            move |u, q| -u + beta * q.tanh(),
            move |_, q| {
                let c = q.cosh();
                beta / (c * c)
            },
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn f_bar(&self, u: f64, q: f64) -> f64 {
        (self.f_bar)(u, q)
    }

    #[inline]
    pub fn f_bar_q(&self, u: f64, q: f64) -> f64 {
        (self.f_bar_q)(u, q)
    }

    /// Largest relative mismatch between `f̄_q` and a central difference of
    /// `f̄` in `q` over the given samples.
    pub fn derivative_mismatch(&self, samples: &[(f64, f64)]) -> f64 {
        samples
            .iter()
            .map(|&(u, q)| {
                let h = 1e-6 * q.abs().max(1.0);
                let fd = (self.f_bar(u, q + h) - self.f_bar(u, q - h)) / (2.0 * h);
                let exact = self.f_bar_q(u, q);
                (fd - exact).abs() / exact.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharflowConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Integration aborts once `|q|` exceeds this.
    pub escape_bound: f64,
    pub max_steps: usize,
}

impl Default for CharflowConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            escape_bound: 1e12,
            max_steps: 1_000_000,
        }
    }
}

impl CharflowConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.escape_bound > 0.0 && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("charflow tolerances must be positive: {self:?}")))
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EvolutionStatus {
    Completed,
    /// `|q|` passed the escape bound at this `u`.
    EscapedBound { u_at_escape: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    /// `Ψ^{u1,u0}(q0)`.
    pub value: f64,
    /// `∂Ψ^{u1,u0}(q0)/∂q0`.
    pub sensitivity: f64,
    pub status: EvolutionStatus,
}

impl EvolutionResult {
    pub fn is_completed(&self) -> bool {
        self.status == EvolutionStatus::Completed
    }
}

/// Characteristic, variational and transport components at the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Augmented {
    pub value: f64,
    pub sensitivity: f64,
    /// `∫_{u0}^{u1} f̄_q(u, q(u)) du` along the characteristic.
    pub transport: f64,
    pub status: EvolutionStatus,
}

pub(crate) fn evolve_augmented(nl: &NonlinearityO2, u0: f64, u1: f64, q0: f64, cfg: &CharflowConfig) -> Result<Augmented> {
    if !(u0.is_finite() && u1.is_finite() && q0.is_finite()) {
        return Err(Error::Domain(format!("non-finite characteristic data ({u0}, {u1}, {q0})")));
    }
    if u0 == u1 {
        return Ok(Augmented {
            value: q0,
            sensitivity: 1.0,
            transport: 0.0,
            status: EvolutionStatus::Completed,
        });
    }
    let bound = cfg.escape_bound;
    let mut escaped_at = None;
    let rhs = |u: f64, y: &[f64; 3]| {
        let fq = nl.f_bar_q(u, y[0]);
        [-nl.f_bar(u, y[0]), -fq * y[1], fq]
    };
    let outcome = ode::integrate(rhs, u0, [q0, 1.0, 0.0], u1, &cfg.tolerances(), |u, y| {
        if y[0].abs() > bound {
            escaped_at = Some(u);
            Control::Stop
        } else {
            Control::Continue
        }
    })
    .map_err(|f| Error::Integration { at: f.t, source: f.error })?;
    let status = match escaped_at {
        Some(u) => EvolutionStatus::EscapedBound { u_at_escape: u },
        None => EvolutionStatus::Completed,
    };
    Ok(Augmented {
        value: outcome.y[0],
        sensitivity: outcome.y[1],
        transport: outcome.y[2],
        status,
    })
}

/// Solve `dq/du = -f̄(u, q)`, `q(u0) = q0` up to `u1` (either direction),
/// together with the sensitivity to `q0`.
pub fn evolve(nl: &NonlinearityO2, u0: f64, u1: f64, q0: f64, cfg: &CharflowConfig) -> Result<EvolutionResult> {
    let a = evolve_augmented(nl, u0, u1, q0, cfg)?;
    Ok(EvolutionResult {
        value: a.value,
        sensitivity: a.sensitivity,
        status: a.status,
    })
}

fn completed(r: EvolutionResult, u0: f64, q0: f64) -> Result<f64> {
    match r.status {
        EvolutionStatus::Completed => Ok(r.value),
        EvolutionStatus::EscapedBound { u_at_escape } => Err(Error::CharacteristicEscape {
            start: u0,
            initial: q0,
            reached: u_at_escape,
        }),
    }
}

/// `(Ψ^{u2,u1}(Ψ^{u1,u0}(q0)), Ψ^{u2,u0}(q0))`; equal up to integration error.
pub fn compose_check(nl: &NonlinearityO2, u0: f64, u1: f64, u2: f64, q0: f64, cfg: &CharflowConfig) -> Result<(f64, f64)> {
    let mid = completed(evolve(nl, u0, u1, q0, cfg)?, u0, q0)?;
    let two_legs = completed(evolve(nl, u1, u2, mid, cfg)?, u1, mid)?;
    let direct = completed(evolve(nl, u0, u2, q0, cfg)?, u0, q0)?;
    Ok((two_legs, direct))
}

/// Integrate the equilibrium equation `u'' + f̄(u, u'²/2) = 0` from
/// `(u_init, p_init)` over `[0, x_span]` and return the largest deviation
/// of `u'²/2` from the characteristic value `Ψ^{u(x),u_init}(p_init²/2)`.
pub fn verify_equilibrium_first_integral(
    nl: &NonlinearityO2,
    u_init: f64,
    p_init: f64,
    x_span: f64,
    cfg: &CharflowConfig,
) -> Result<f64> {
    if p_init == 0.0 || !p_init.is_finite() {
        return Err(Error::Domain("equilibrium first integral needs a nonzero initial slope".into()));
    }
    if !(x_span > 0.0) {
        return Err(Error::Domain(format!("x_span must be positive, got {x_span}")));
    }
    let q_init = 0.5 * p_init * p_init;
    let bound = cfg.escape_bound;
    let mut worst: f64 = 0.0;
    let mut failure: Option<Error> = None;
    let mut blown_at = None;
    let outcome = ode::integrate(
        |_, y: &[f64; 2]| [y[1], -nl.f_bar(y[0], 0.5 * y[1] * y[1])],
        0.0,
        [u_init, p_init],
        x_span,
        &cfg.tolerances(),
        |x, y| {
            if y[0].abs() > bound || y[1].abs() > bound {
                blown_at = Some(x);
                return Control::Stop;
            }
            match evolve(nl, u_init, y[0], q_init, cfg).and_then(|r| completed(r, u_init, q_init)) {
                Ok(q) => {
                    worst = worst.max((0.5 * y[1] * y[1] - q).abs());
                    Control::Continue
                }
                Err(e) => {
                    failure = Some(e);
                    Control::Stop
                }
            }
        },
    )
    .map_err(|f| Error::Integration { at: f.t, source: f.error })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(x) = blown_at {
        return Err(Error::CharacteristicEscape {
            start: u_init,
            initial: q_init,
            reached: x,
        });
    }
    debug_assert!(!outcome.stopped);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> CharflowConfig {
        CharflowConfig::default()
    }

    #[test]
    fn zero_field_is_identity_flow() {
        let r = evolve(&NonlinearityO2::zero(), 0.0, 5.0, 3.0, &cfg()).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.sensitivity, 1.0);
        assert!(r.is_completed());
    }

    #[test]
    fn linear_in_q_matches_closed_form() {
        let nl = NonlinearityO2::linear_in_q(1.0);
        for &(u, q) in &[(0.7, 1.3), (-1.2, 0.4), (2.0, -0.8)] {
            let r = evolve(&nl, u, 0.0, q, &cfg()).unwrap();
            let e = u.exp();
            assert!((r.value - q * e).abs() < 1e-8 * e.max(1.0), "{r:?}");
            assert!((r.sensitivity - e).abs() < 1e-8 * e);
        }
    }

    #[test]
    fn q_independent_shifts_by_primitive() {
        let lambda = 2.0;
        let nl = NonlinearityO2::chafee_infante(lambda);
        let prim = |u: f64| lambda * (u * u / 2.0 - u.powi(4) / 4.0);
        for &(u0, u1, q0) in &[(0.8, 0.0, 0.1), (-1.5, 0.3, 2.0), (0.0, 1.7, -0.5)] {
            let r = evolve(&nl, u0, u1, q0, &cfg()).unwrap();
            let expected = q0 + prim(u0) - prim(u1);
            assert!((r.value - expected).abs() < 1e-9, "{} vs {}", r.value, expected);
            assert_eq!(r.sensitivity, 1.0);
        }
    }

    #[test]
    fn identity_when_endpoints_coincide() {
        let nl = NonlinearityO2::saturating(0.5);
        let r = evolve(&nl, 0.37, 0.37, -2.5, &cfg()).unwrap();
        assert_eq!((r.value, r.sensitivity), (-2.5, 1.0));
    }

    #[test]
    fn compose_examples() {
        let (a, b) = compose_check(&NonlinearityO2::zero(), 0.0, 1.0, 2.0, 0.4, &cfg()).unwrap();
        assert_eq!((a, b), (0.4, 0.4));

        let (a, b) = compose_check(&NonlinearityO2::linear_in_q(1.0), 0.0, 1.0, 2.0, 1.0, &cfg()).unwrap();
        let e = (-2.0f64).exp();
        assert!((a - e).abs() < 1e-10 && (b - e).abs() < 1e-10);

        let nl = NonlinearityO2::chafee_infante(2.0);
        let (a, b) = compose_check(&nl, 0.0, 0.5, 1.0, 0.3, &cfg()).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn negative_q_passes_through() {
        // dq/du = -(-u) = u: starting negative, q crosses zero on the way.
        let nl = NonlinearityO2::q_independent("minus-u", |u| -u);
        let r = evolve(&nl, 0.0, 2.0, -1.0, &cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quadratic_growth_escapes() {
        let nl = NonlinearityO2::new("riccati", |_, q| -q * q, |_, q| -2.0 * q);
        // dq/du = q², q(0) = 1 blows up at u = 1.
        let r = evolve(&nl, 0.0, 2.0, 1.0, &cfg()).unwrap();
        match r.status {
            EvolutionStatus::EscapedBound { u_at_escape } => assert!(u_at_escape > 0.99 && u_at_escape <= 1.0),
            other => panic!("expected escape, got {other:?}"),
        }
        assert!(compose_check(&nl, 0.0, 0.5, 2.0, 1.0, &cfg()).is_err());
    }

    #[test]
    fn non_finite_input_rejected() {
        assert!(evolve(&NonlinearityO2::zero(), f64::NAN, 0.0, 1.0, &cfg()).is_err());
    }

    #[test]
    fn non_finite_rhs_is_integration_failure() {
        let nl = NonlinearityO2::new("bad", |u, _| if u > 0.5 { f64::NAN } else { 0.0 }, |_, _| 0.0);
        let err = evolve(&nl, 0.0, 1.0, 1.0, &cfg()).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }), "{err}");
    }

    #[test]
    fn equilibrium_first_integral_harmonic() {
        // u'' + u = 0 from (0, 1): q(u) = (1 - u²)/2.
        let nl = NonlinearityO2::q_independent("harmonic", |u| u);
        let d = verify_equilibrium_first_integral(&nl, 0.0, 1.0, std::f64::consts::PI, &cfg()).unwrap();
        assert!(d <= 1e-6, "defect {d}");
    }

    #[test]
    fn equilibrium_first_integral_zero_field() {
        let d = verify_equilibrium_first_integral(&NonlinearityO2::zero(), 0.0, 2.0, 1.0, &cfg()).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn equilibrium_first_integral_cubic() {
        let nl = NonlinearityO2::chafee_infante(5.0);
        let d = verify_equilibrium_first_integral(&nl, 0.1, 0.5, 1.0, &cfg()).unwrap();
        assert!(d <= 1e-6, "defect {d}");
    }

    #[test]
    fn equilibrium_first_integral_needs_slope() {
        assert!(verify_equilibrium_first_integral(&NonlinearityO2::zero(), 0.0, 0.0, 1.0, &cfg()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let bad = CharflowConfig { rel_tol: 0.0, ..cfg() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn library_derivatives_are_consistent() {
        let samples: Vec<(f64, f64)> = (0..20).map(|i| (-2.0 + 0.2 * i as f64, -1.0 + 0.3 * i as f64)).collect();
        for nl in [
            NonlinearityO2::linear_in_q(1.5),
            NonlinearityO2::chafee_infante_coupled(2.0, 0.7),
            NonlinearityO2::gradient_quadratic(-1.0, 1.0),
            NonlinearityO2::saturating(0.5),
        ] {
            assert!(nl.derivative_mismatch(&samples) < 1e-5, "{}", nl.label());
        }
    }
}
