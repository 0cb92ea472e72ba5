//! Lagrange functions `L(x, u, p)` for general `f(x, u, u_x)` under
//! separated boundary conditions, and the integrability defect that
//! obstructs the same construction on the circle.
//!
//! With `L_pp = exp g`, the exponent `g` is transported along the
//! characteristic system `u' = p, p' = -f(x, u, p)` by `g' = f_p`, starting
//! from `g = 0` on `x = 0`.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::charflow::CharflowConfig;
use crate::error::{Error, Result};
use crate::functional::{decay_identity_residuals, BoundaryCondition, LagrangeDensity};
use crate::ode::{self, Control};
use crate::pde::{GeneralNonlinearity, TrajectoryRecord};
use crate::quadrature::{Quadrature, QuadratureConfig};

/// State on a characteristic of the separated construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicState {
    pub x: f64,
    pub u: f64,
    pub p: f64,
    /// Exponent accumulated along the curve.
    pub g: f64,
}

fn characteristic_rhs(nl: &GeneralNonlinearity) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] + '_ {
    move |x, y| [y[1], -nl.f(x, y[0], y[1]), nl.f_p(x, y[0], y[1])]
}

/// Follow the characteristic through `start` to `x_target`, accumulating
/// `∫ f_p` into `g`.
pub fn trace_characteristic(nl: &GeneralNonlinearity, start: CharacteristicState, x_target: f64, cfg: &CharflowConfig) -> Result<CharacteristicState> {
    let bound = cfg.escape_bound;
    let mut escaped = None;
    let out = ode::integrate(
        characteristic_rhs(nl),
        start.x,
        [start.u, start.p, start.g],
        x_target,
        &cfg.tolerances(),
        |x, y| {
            if y[0].abs() > bound || y[1].abs() > bound {
                escaped = Some(x);
                Control::Stop
            } else {
                Control::Continue
            }
        },
    )
    .map_err(|f| Error::Integration { at: f.t, source: f.error })?;
    if let Some(x) = escaped {
        return Err(Error::CharacteristicEscape {
            start: start.x,
            initial: start.p,
            reached: x,
        });
    }
    Ok(CharacteristicState {
        x: out.t,
        u: out.y[0],
        p: out.y[1],
        g: out.y[2],
    })
}

/// `g(x, u, p)` normalized by `g(0, ·, ·) = 0`.
pub fn g_value(nl: &GeneralNonlinearity, x: f64, u: f64, p: f64, cfg: &CharflowConfig) -> Result<f64> {
    let back = trace_characteristic(nl, CharacteristicState { x, u, p, g: 0.0 }, 0.0, cfg)?;
    Ok(-back.g)
}

/// `L(x, u, p) = ∫_0^p ∫_0^{p1} exp g(x, u, p2) dp2 dp1 - F(x, u)`.
pub struct SeparatedLagrangian {
    nl: GeneralNonlinearity,
    charflow_cfg: CharflowConfig,
    p_rule: Quadrature,
    u_rule: Quadrature,
    cache: RefCell<HashMap<(u64, u64, u64), f64>>,
}

impl SeparatedLagrangian {
    pub fn new(nl: GeneralNonlinearity, charflow_cfg: CharflowConfig, quad_cfg: QuadratureConfig) -> Result<Self> {
        charflow_cfg.validate()?;
        quad_cfg.validate()?;
        Ok(Self {
            nl,
            charflow_cfg,
            p_rule: Quadrature::new(quad_cfg.rule, quad_cfg.panels)?,
            u_rule: Quadrature::new(quad_cfg.rule, quad_cfg.nested_panels)?,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn nonlinearity(&self) -> &GeneralNonlinearity {
        &self.nl
    }

    pub fn g(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        let key = (x.to_bits(), u.to_bits(), p.to_bits());
        if let Some(v) = self.cache.borrow().get(&key) {
            return Ok(*v);
        }
        let g = g_value(&self.nl, x, u, p, &self.charflow_cfg)?;
        self.cache.borrow_mut().insert(key, g);
        Ok(g)
    }

    /// `F(x, u) = ∫_0^u f(x, u1, 0) exp g(x, u1, 0) du1`.
    pub fn potential(&self, x: f64, u: f64) -> Result<f64> {
        self.u_rule
            .try_integrate(0.0, u, |u1| Ok(self.nl.f(x, u1, 0.0) * self.g(x, u1, 0.0)?.exp()))
    }

    pub fn value(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        let kinetic = self
            .p_rule
            .try_integrate(0.0, p, |p2| Ok((p - p2) * self.g(x, u, p2)?.exp()))?;
        Ok(kinetic - self.potential(x, u)?)
    }

    /// `L_pp = exp g`.
    pub fn convexity(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        Ok(self.g(x, u, p)?.exp())
    }
}

impl LagrangeDensity for SeparatedLagrangian {
    fn density(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        self.value(x, u, p)
    }

    fn convexity(&self, x: f64, u: f64, p: f64) -> Result<f64> {
        SeparatedLagrangian::convexity(self, x, u, p)
    }
}

/// Decay-identity defects along a Dirichlet trajectory, using the
/// trajectory's reports (`V` and dissipation at each save).
pub fn decay_identity_residual(trajectory: &TrajectoryRecord) -> Result<Vec<f64>> {
    if trajectory.snapshots.first().map(|s| s.bc()) != Some(BoundaryCondition::Dirichlet) {
        return Err(Error::Domain("separated decay identity is checked on Dirichlet trajectories".into()));
    }
    if trajectory.reports.len() != trajectory.len() {
        return Err(Error::Domain("trajectory has no functional reports attached".into()));
    }
    let v: Vec<f64> = trajectory.reports.iter().map(|r| r.v).collect();
    let d: Vec<f64> = trajectory.reports.iter().map(|r| r.dissipation).collect();
    Ok(decay_identity_residuals(&trajectory.times, &v, &d))
}

pub const SHOOTING_MAX_ITERATIONS: usize = 50;
pub const SHOOTING_TOLERANCE: f64 = 1e-10;

/// Locate a 1-periodic orbit of `u' = p, p' = -f(x, u, p)` near `seed`
/// by single shooting on the period map. A Levenberg–Marquardt step takes
/// over when the Jacobian is near singular (orbits in a continuous family).
pub fn locate_periodic_orbit(nl: &GeneralNonlinearity, seed: (f64, f64), cfg: &CharflowConfig) -> Result<(f64, f64)> {
    let period_map = |z: [f64; 2]| -> Result<[f64; 2]> {
        let end = trace_characteristic(nl, CharacteristicState { x: 0.0, u: z[0], p: z[1], g: 0.0 }, 1.0, cfg)?;
        Ok([end.u - z[0], end.p - z[1]])
    };
    let mut z = [seed.0, seed.1];
    let mut r = period_map(z)?;
    let norm = |r: &[f64; 2]| r[0].hypot(r[1]);
    for _ in 0..SHOOTING_MAX_ITERATIONS {
        if norm(&r) <= SHOOTING_TOLERANCE {
            return Ok((z[0], z[1]));
        }
        // Finite-difference Jacobian of the residual.
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = 1e-7 * z[j].abs().max(1.0);
            let mut zp = z;
            zp[j] += h;
            let mut zm = z;
            zm[j] -= h;
            let (rp, rm) = (period_map(zp)?, period_map(zm)?);
            for i in 0..2 {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let step = lm_step(&jac, &r);
        let mut mu_scale = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial = [z[0] + mu_scale * step[0], z[1] + mu_scale * step[1]];
            let rt = period_map(trial)?;
            if norm(&rt) < norm(&r) || norm(&rt) <= SHOOTING_TOLERANCE {
                z = trial;
                r = rt;
                accepted = true;
                break;
            }
            mu_scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(&r) <= SHOOTING_TOLERANCE {
        return Ok((z[0], z[1]));
    }
    Err(Error::NoPeriodicOrbit {
        iterations: SHOOTING_MAX_ITERATIONS,
        residual: norm(&r),
    })
}

/// Newton step for `J δ = -r`, regularized when `J` is close to singular.
fn lm_step(jac: &[[f64; 2]; 2], r: &[f64; 2]) -> [f64; 2] {
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let scale = jac.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if det.abs() > 1e-8 * scale * scale {
        return [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
    }
    // (JᵀJ + μI) δ = -Jᵀ r
    let mu = 1e-10 * scale * scale;
    let a = jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0] + mu;
    let b = jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1];
    let d = jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1] + mu;
    let g0 = -(jac[0][0] * r[0] + jac[1][0] * r[1]);
    let g1 = -(jac[0][1] * r[0] + jac[1][1] * r[1]);
    let det2 = a * d - b * b;
    [(d * g0 - b * g1) / det2, (a * g1 - b * g0) / det2]
}

/// `∫_0^1 f_p(x, u(x), p(x)) dx` along the 1-periodic characteristic found
/// from `seed`. A nonzero value rules out a periodic exponent `g`.
pub fn integrability_defect(nl: &GeneralNonlinearity, periodic_orbit_seed: (f64, f64), cfg: &CharflowConfig) -> Result<f64> {
    let (u0, p0) = locate_periodic_orbit(nl, periodic_orbit_seed, cfg)?;
    let end = trace_characteristic(nl, CharacteristicState { x: 0.0, u: u0, p: p0, g: 0.0 }, 1.0, cfg)?;
    Ok(end.g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charflow::NonlinearityO2;

    fn cubic_plus_advection(lambda: f64, eps: f64) -> GeneralNonlinearity {
        GeneralNonlinearity::new(
            "cubic+eps p",
            move |_, u, p| lambda * u * (1.0 - u * u) + eps * p,
            move |_, _, _| eps,
            false,
        )
    }

    #[test]
    fn g_vanishes_without_gradient_dependence() {
        let nl = GeneralNonlinearity::from_o2(&NonlinearityO2::chafee_infante(3.0));
        assert_eq!(g_value(&nl, 0.7, 0.4, 1.2, &CharflowConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn g_grows_linearly_for_constant_fp() {
        let nl = cubic_plus_advection(2.0, 0.5);
        for &(x, u, p) in &[(0.3, 0.2, 0.5), (1.0, -0.4, 1.0), (0.0, 0.9, -2.0)] {
            let g = g_value(&nl, x, u, p, &CharflowConfig::default()).unwrap();
            assert!((g - 0.5 * x).abs() < 1e-8, "{g}");
        }
    }

    #[test]
    fn separated_lagrangian_closed_form() {
        let (lambda, eps) = (2.0, 0.5);
        let l = SeparatedLagrangian::new(cubic_plus_advection(lambda, eps), CharflowConfig::default(), QuadratureConfig::default()).unwrap();
        for &(x, u, p) in &[(0.25f64, 0.6f64, 1.3f64), (0.8, -1.1, -0.7)] {
            let f0 = lambda * (u * u / 2.0 - u.powi(4) / 4.0);
            let exact = (eps * x).exp() * (0.5 * p * p - f0);
            assert!((l.value(x, u, p).unwrap() - exact).abs() < 1e-6);
            assert!(l.convexity(x, u, p).unwrap() > 0.0);
        }
    }

    #[test]
    fn classical_reduction() {
        let lambda = 3.0;
        let l = SeparatedLagrangian::new(
            GeneralNonlinearity::from_o2(&NonlinearityO2::chafee_infante(lambda)),
            CharflowConfig::default(),
            QuadratureConfig::default(),
        )
        .unwrap();
        let (u, p) = (0.8f64, -1.2f64);
        let exact = 0.5 * p * p - lambda * (u * u / 2.0 - u.powi(4) / 4.0);
        assert!((l.value(0.4, u, p).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn defect_of_damped_linear_center() {
        let eps = 0.3;
        let w2 = (2.0 * std::f64::consts::PI).powi(2);
        let nl = GeneralNonlinearity::new("lin", move |_, u, p| w2 * u + eps * p, move |_, _, _| eps, false);
        let d = integrability_defect(&nl, (0.1, 0.2), &CharflowConfig::default()).unwrap();
        assert!((d - eps).abs() < 1e-6, "{d}");
    }

    #[test]
    fn defect_zero_without_gradient_dependence() {
        let w2 = (2.0 * std::f64::consts::PI).powi(2);
        let nl = GeneralNonlinearity::new("center", move |_, u, _| w2 * u, |_, _, _| 0.0, false);
        let d = integrability_defect(&nl, (0.0, 0.0), &CharflowConfig::default()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn shooting_reports_failure() {
        // u' = p, p' = -1: no periodic orbit.
        let nl = GeneralNonlinearity::new("drift", |_, _, _| 1.0, |_, _, _| 0.0, false);
        assert!(matches!(
            locate_periodic_orbit(&nl, (0.0, 0.0), &CharflowConfig::default()),
            Err(Error::NoPeriodicOrbit { .. })
        ));
    }
}
