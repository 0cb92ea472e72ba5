//! The Lagrange function `L(u, p)` whose integral over the circle is a
//! Lyapunov function for `u_t = u_xx + f̄(u, u_x²/2)`.
//!
//! Ingredients, all built from characteristics that end at the basepoint
//! `u = 0`:
//!
//! * `F_q(u, q) = ∫_0^u f̄_q(u1, Ψ^{u1,u}(q)) du1`, the metric exponent,
//!   obtained by transporting `f̄_q` along the characteristic through `(u, q)`;
//! * `F(u) = ∫_0^u f̄(u1, 0) exp F_q(u1, 0) du1`;
//! * `φ(u, p) = ∫_0^p Ψ_q^{0,u}(p2²/2) dp2`.
//!
//! Two equivalent forms of `L` are offered. [`LagrangianForm::DoubleIntegral`]
//! integrates `exp F_q` twice in `p` and subtracts `F`;
//! [`LagrangianForm::Reduced`] evaluates `p φ(u, p) - Ψ^{0,u}(p²/2)`.
//! The repeated `p`-integral is computed as a single integral with the
//! kernel `(p - p2)`.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::charflow::{evolve_augmented, Augmented, CharflowConfig, EvolutionStatus, NonlinearityO2};
use crate::error::{Error, Result};
use crate::functional::LagrangeDensity;
use crate::quadrature::{Quadrature, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LagrangianForm {
    DoubleIntegral,
    #[default]
    Reduced,
}

/// Evaluates `L`, `L_pp` and their ingredients for one nonlinearity.
///
/// Characteristic solves are memoized per instance, so an evaluator is not
/// `Sync`; use [`LagrangianEvaluator::fresh`] to hand a copy to another
/// thread.
pub struct LagrangianEvaluator {
    nl: NonlinearityO2,
    charflow_cfg: CharflowConfig,
    quad_cfg: QuadratureConfig,
    form: LagrangianForm,
    p_rule: Quadrature,
    u_rule: Quadrature,
    cache: RefCell<HashMap<(u64, u64), Augmented>>,
}

impl std::fmt::Debug for LagrangianEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianEvaluator")
            .field("nl", &self.nl)
            .field("form", &self.form)
            .field("quad_cfg", &self.quad_cfg)
            .finish_non_exhaustive()
    }
}

impl LagrangianEvaluator {
    pub fn new(nl: NonlinearityO2, charflow_cfg: CharflowConfig, quad_cfg: QuadratureConfig, form: LagrangianForm) -> Result<Self> {
        charflow_cfg.validate()?;
        quad_cfg.validate()?;
        Ok(Self {
            p_rule: Quadrature::new(quad_cfg.rule, quad_cfg.panels)?,
            u_rule: Quadrature::new(quad_cfg.rule, quad_cfg.nested_panels)?,
            nl,
            charflow_cfg,
            quad_cfg,
            form,
            cache: RefCell::new(HashMap::new()),
        })
    }

    /// Default tolerances and quadrature.
    pub fn with_defaults(nl: NonlinearityO2, form: LagrangianForm) -> Self {
        Self::new(nl, CharflowConfig::default(), QuadratureConfig::default(), form).expect("defaults are valid")
    }

    /// Same configuration, empty cache.
    pub fn fresh(&self) -> Self {
        Self {
            nl: self.nl.clone(),
            charflow_cfg: self.charflow_cfg,
            quad_cfg: self.quad_cfg,
            form: self.form,
            p_rule: self.p_rule.clone(),
            u_rule: self.u_rule.clone(),
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn with_form(&self, form: LagrangianForm) -> Self {
        Self { form, ..self.fresh() }
    }

    pub fn nonlinearity(&self) -> &NonlinearityO2 {
        &self.nl
    }

    pub fn form(&self) -> LagrangianForm {
        self.form
    }

    pub fn cached_solves(&self) -> usize {
        self.cache.borrow().len()
    }

    /// Characteristic through `(u, q)` evolved to the basepoint `u = 0`.
    fn to_basepoint(&self, u: f64, q: f64) -> Result<Augmented> {
        let key = (u.to_bits(), q.to_bits());
        if let Some(hit) = self.cache.borrow().get(&key) {
            return Ok(*hit);
        }
        let a = evolve_augmented(&self.nl, u, 0.0, q, &self.charflow_cfg)?;
        if let EvolutionStatus::EscapedBound { u_at_escape } = a.status {
            return Err(Error::CharacteristicEscape {
                start: u,
                initial: q,
                reached: u_at_escape,
            });
        }
        self.cache.borrow_mut().insert(key, a);
        Ok(a)
    }

    /// `F_q(u, q)`.
    #[doc(alias = "F_q")]
    pub fn metric_exponent(&self, u: f64, q: f64) -> Result<f64> {
        // transport holds ∫_u^0 f̄_q; F_q integrates from 0 to u.
        Ok(-self.to_basepoint(u, q)?.transport)
    }

    /// `Ψ^{0,u}(q)`.
    pub fn basepoint_value(&self, u: f64, q: f64) -> Result<f64> {
        Ok(self.to_basepoint(u, q)?.value)
    }

    /// `Ψ_q^{0,u}(q)`.
    pub fn basepoint_sensitivity(&self, u: f64, q: f64) -> Result<f64> {
        Ok(self.to_basepoint(u, q)?.sensitivity)
    }

    /// `F(u)`, the potential term of `L`.
    #[doc(alias = "F")]
    pub fn potential(&self, u: f64) -> Result<f64> {
        self.u_rule.try_integrate(0.0, u, |u1| {
            let w = self.metric_exponent(u1, 0.0)?.exp();
            Ok(self.nl.f_bar(u1, 0.0) * w)
        })
    }

    /// `φ(u, p)`.
    pub fn phi(&self, u: f64, p: f64) -> Result<f64> {
        self.p_rule.try_integrate(0.0, p, |p2| self.basepoint_sensitivity(u, 0.5 * p2 * p2))
    }

    /// `∫_0^p ∫_0^{p1} exp F_q(u, p2²/2) dp2 dp1`.
    pub fn kinetic(&self, u: f64, p: f64) -> Result<f64> {
        self.p_rule
            .try_integrate(0.0, p, |p2| Ok((p - p2) * self.metric_exponent(u, 0.5 * p2 * p2)?.exp()))
    }

    /// `L(u, p)` in the evaluator's form.
    pub fn value(&self, u: f64, p: f64) -> Result<f64> {
        let l = match self.form {
            LagrangianForm::DoubleIntegral => self.kinetic(u, p)? - self.potential(u)?,
            LagrangianForm::Reduced => p * self.phi(u, p)? - self.basepoint_value(u, 0.5 * p * p)?,
        };
        if l.is_finite() {
            Ok(l)
        } else {
            Err(Error::Domain(format!("non-finite Lagrangian at (u, p) = ({u}, {p})")))
        }
    }

    /// `L_pp(u, p) = exp F_q(u, p²/2)`.
    #[doc(alias = "L_pp")]
    pub fn convexity(&self, u: f64, p: f64) -> Result<f64> {
        Ok(self.metric_exponent(u, 0.5 * p * p)?.exp())
    }
}

impl LagrangeDensity for LagrangianEvaluator {
    fn density(&self, _x: f64, u: f64, p: f64) -> Result<f64> {
        self.value(u, p)
    }

    fn convexity(&self, _x: f64, u: f64, p: f64) -> Result<f64> {
        LagrangianEvaluator::convexity(self, u, p)
    }
}

/// Region on which the diffusion coefficient is checked for positivity.
const A_CHECK_U: (f64, f64) = (-4.0, 4.0);
const A_CHECK_Q: (f64, f64) = (0.0, 8.0);
const A_CHECK_SAMPLES: usize = 33;

/// Quasilinear reduction: `u_t = ā u_xx + f̄` has the Lyapunov structure
/// of the semilinear equation with nonlinearity `f̄ / ā`.
pub fn effective_nonlinearity(f_bar: &NonlinearityO2, a_bar: &NonlinearityO2) -> Result<NonlinearityO2> {
    let mut a_min = f64::INFINITY;
    for i in 0..A_CHECK_SAMPLES {
        let u = A_CHECK_U.0 + (A_CHECK_U.1 - A_CHECK_U.0) * i as f64 / (A_CHECK_SAMPLES - 1) as f64;
        for j in 0..A_CHECK_SAMPLES {
            let q = A_CHECK_Q.0 + (A_CHECK_Q.1 - A_CHECK_Q.0) * j as f64 / (A_CHECK_SAMPLES - 1) as f64;
            a_min = a_min.min(a_bar.f_bar(u, q));
        }
    }
    if !(a_min > 0.0) {
        return Err(Error::Domain(format!(
            "diffusion coefficient {} must be positive (minimum sample {a_min})",
            a_bar.label()
        )));
    }
    let (f1, a1) = (f_bar.clone(), a_bar.clone());
    let (f2, a2) = (f_bar.clone(), a_bar.clone());
    Ok(NonlinearityO2::new(
        format!("{}/{}", f_bar.label(), a_bar.label()),
        move |u, q| f1.f_bar(u, q) / a1.f_bar(u, q),
        move |u, q| {
            let a = a2.f_bar(u, q);
            (f2.f_bar_q(u, q) * a - f2.f_bar(u, q) * a2.f_bar_q(u, q)) / (a * a)
        },
    ))
}
