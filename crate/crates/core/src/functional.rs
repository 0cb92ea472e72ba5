//! Discrete Lyapunov functional `V(u) = ∫ L(x, u, u_x) dx` and the
//! dissipation integral `∫ w L_pp (u_t)² dx`.

use serde::{Deserialize, Serialize};

use crate::charflow::NonlinearityO2;
use crate::error::{Error, Result};

pub const MIN_GRID_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    Periodic,
    Dirichlet,
    Neumann,
}

/// Samples of `u` on a uniform grid.
///
/// Periodic grids use `x_i = i ℓ / n`; interval grids include both ends,
/// `x_i = i ℓ / (n - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    values: Vec<f64>,
    domain_length: f64,
    bc: BoundaryCondition,
}

impl ScalarField {
    pub fn new(values: Vec<f64>, domain_length: f64, bc: BoundaryCondition) -> Result<Self> {
        let field = Self::unchecked(values, domain_length, bc)?;
        if bc == BoundaryCondition::Dirichlet {
            let scale = field.max_abs().max(1.0);
            let n = field.len();
            if field.values[0].abs() > 1e-12 * scale || field.values[n - 1].abs() > 1e-12 * scale {
                return Err(Error::Domain("Dirichlet field must vanish at both ends".into()));
            }
        }
        Ok(field)
    }

    /// Grid checks only; boundary values are not inspected.
    pub(crate) fn unchecked(values: Vec<f64>, domain_length: f64, bc: BoundaryCondition) -> Result<Self> {
        if values.len() < MIN_GRID_POINTS {
            return Err(Error::Domain(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {}",
                values.len()
            )));
        }
        if !(domain_length > 0.0 && domain_length.is_finite()) {
            return Err(Error::Domain(format!("domain length must be positive, got {domain_length}")));
        }
        Ok(Self { values, domain_length, bc })
    }

    /// Sample `g` at the grid points. Dirichlet ends are set to zero.
    pub fn from_fn(n: usize, domain_length: f64, bc: BoundaryCondition, g: impl Fn(f64) -> f64) -> Result<Self> {
        let h = grid_spacing(n, domain_length, bc);
        let mut values: Vec<f64> = (0..n).map(|i| g(i as f64 * h)).collect();
        if bc == BoundaryCondition::Dirichlet && n > 0 {
            values[0] = 0.0;
            values[n - 1] = 0.0;
        }
        Self::new(values, domain_length, bc)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn spacing(&self) -> f64 {
        grid_spacing(self.len(), self.domain_length, self.bc)
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::Domain("value count does not match grid".into()));
        }
        Ok(Self { values, ..self.clone() })
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        self.len() == other.len() && self.domain_length == other.domain_length && self.bc == other.bc
    }

    /// Cyclic shift by `k` grid points: `out[i] = values[i - k]`.
    pub fn rotated(&self, k: usize) -> Self {
        let n = self.len();
        let k = k % n;
        let mut values = self.values.clone();
        values.rotate_right(k);
        Self { values, ..self.clone() }
    }

    /// Quadrature of a per-point integrand: rectangle rule on the circle,
    /// trapezoid rule on intervals.
    pub fn integrate(&self, integrand: &[f64]) -> f64 {
        let h = self.spacing();
        let n = integrand.len();
        let sum: f64 = integrand.iter().sum();
        match self.bc {
            BoundaryCondition::Periodic => h * sum,
            _ => h * (sum - 0.5 * (integrand[0] + integrand[n - 1])),
        }
    }
}

pub fn grid_spacing(n: usize, domain_length: f64, bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::Periodic => domain_length / n as f64,
        _ => domain_length / (n.max(2) - 1) as f64,
    }
}

/// Second-order central `u_x`; wrap-around on the circle and one-sided
/// second-order stencils at interval ends.
pub fn gradient(field: &ScalarField) -> ScalarField {
    let u = field.values();
    let n = u.len();
    let h = field.spacing();
    let inv = 1.0 / (2.0 * h);
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - u[i - 1]) * inv;
    }
    match field.bc() {
        BoundaryCondition::Periodic => {
            out[0] = (u[1] - u[n - 1]) * inv;
            out[n - 1] = (u[0] - u[n - 2]) * inv;
        }
        _ => {
            out[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv;
            out[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * inv;
        }
    }
    ScalarField {
        values: out,
        domain_length: field.domain_length(),
        bc: field.bc(),
    }
}

/// A Lagrange function `L(x, u, p)` with its convexity weight `L_pp`.
pub trait LagrangeDensity {
    fn density(&self, x: f64, u: f64, p: f64) -> Result<f64>;
    fn convexity(&self, x: f64, u: f64, p: f64) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    #[serde(rename = "V")]
    pub v: f64,
    /// `∫ w L_pp (u_t)² dx`, nonnegative; zero until filled in by a monitor.
    pub dissipation: f64,
    pub convexity_min: f64,
}

/// `V` on the grid with the minimum of `L_pp` recorded.
pub fn evaluate_v<D: LagrangeDensity + ?Sized>(density: &D, field: &ScalarField) -> Result<FunctionalReport> {
    let ux = gradient(field);
    let n = field.len();
    let mut integrand = Vec::with_capacity(n);
    let mut convexity_min = f64::INFINITY;
    for i in 0..n {
        let (x, u, p) = (field.x(i), field.values[i], ux.values[i]);
        let l = density.density(x, u, p).map_err(|e| e.at_index(i))?;
        let w = density.convexity(x, u, p).map_err(|e| e.at_index(i))?;
        if !l.is_finite() {
            return Err(Error::NonFinite { what: "Lagrangian", index: i });
        }
        convexity_min = convexity_min.min(w);
        integrand.push(l);
    }
    Ok(FunctionalReport {
        v: field.integrate(&integrand),
        dissipation: 0.0,
        convexity_min,
    })
}

/// `-∫ w L_pp(u, u_x) (u_t)² dx` with `w = 1` or `w = 1/ā(u, u_x²/2)`.
pub fn dissipation_rate<D: LagrangeDensity + ?Sized>(
    density: &D,
    field: &ScalarField,
    u_t: &ScalarField,
    weight_a: Option<&NonlinearityO2>,
) -> Result<f64> {
    if !field.same_grid(u_t) {
        return Err(Error::Domain("field and u_t must share grid and boundary condition".into()));
    }
    let ux = gradient(field);
    let mut integrand = Vec::with_capacity(field.len());
    for i in 0..field.len() {
        let (x, u, p) = (field.x(i), field.values[i], ux.values[i]);
        let lpp = density.convexity(x, u, p).map_err(|e| e.at_index(i))?;
        let w = match weight_a {
            None => 1.0,
            Some(a) => {
                let a = a.f_bar(u, 0.5 * p * p);
                if !(a > 0.0) {
                    return Err(Error::Domain(format!("diffusion coefficient {a} not positive")).at_index(i));
                }
                1.0 / a
            }
        };
        let ut = u_t.values[i];
        integrand.push(w * lpp * ut * ut);
    }
    Ok(-field.integrate(&integrand))
}

/// Defects `|ΔV/Δt - V̇|` at interior save points, where `V̇ = -dissipation`
/// and `ΔV/Δt` is the three-point derivative (second order on uneven
/// spacing). Endpoints are reported as NaN.
pub fn decay_identity_residuals(times: &[f64], v: &[f64], dissipation: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut out = vec![f64::NAN; n];
    for k in 1..n.saturating_sub(1) {
        let (hm, hp) = (times[k] - times[k - 1], times[k + 1] - times[k]);
        let dv = (hm * hm * v[k + 1] - hp * hp * v[k - 1] + (hp * hp - hm * hm) * v[k]) / (hm * hp * (hm + hp));
        out[k] = (dv + dissipation[k]).abs();
    }
    out
}
