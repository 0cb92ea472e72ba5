//! Method-of-lines integration of `u_t = a(x, u, u_x) u_xx + f(x, u, u_x)`
//! on the circle or on an interval with Dirichlet/Neumann ends.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::charflow::NonlinearityO2;
use crate::error::{Error, Result};
use crate::functional::{BoundaryCondition, FunctionalReport, ScalarField};

pub type ScalarFn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Blow-up guard on `max |u|`.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

/// RK4 stability interval on the negative real axis.
const RK4_STABILITY: f64 = 2.785;

/// General nonlinearity `f(x, u, p)` with its partial derivative in `p`.
#[derive(Clone)]
pub struct GeneralNonlinearity {
    label: String,
    f: ScalarFn3,
    f_p: ScalarFn3,
    /// True when `f` is periodic in `x` with the domain period.
    pub x_periodic: bool,
}

impl fmt::Debug for GeneralNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralNonlinearity")
            .field("label", &self.label)
            .field("x_periodic", &self.x_periodic)
            .finish_non_exhaustive()
    }
}

impl GeneralNonlinearity {
    pub fn new<F, Fp>(label: impl Into<String>, f: F, f_p: Fp, x_periodic: bool) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        Fp: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            f: Arc::new(f),
            f_p: Arc::new(f_p),
            x_periodic,
        }
    }

    /// `f(x, u, p) = f̄(u, p²/2)`, `f_p = p f̄_q`.
    pub fn from_o2(nl: &NonlinearityO2) -> Self {
        let (a, b) = (nl.clone(), nl.clone());
        Self::new(
            nl.label().to_string(),
            move |_, u, p| a.f_bar(u, 0.5 * p * p),
            move |_, u, p| p * b.f_bar_q(u, 0.5 * p * p),
            true,
        )
    }

    /// `f̄(u, p²/2) - c p`: the reflection-symmetric part plus advection.
    pub fn advected(nl: &NonlinearityO2, c: f64) -> Self {
        let (a, b) = (nl.clone(), nl.clone());
        Self::new(
            format!("{}-advected(c={c})", nl.label()),
            move |_, u, p| a.f_bar(u, 0.5 * p * p) - c * p,
            move |_, u, p| p * b.f_bar_q(u, 0.5 * p * p) - c,
            true,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn f(&self, x: f64, u: f64, p: f64) -> f64 {
        (self.f)(x, u, p)
    }

    #[inline]
    pub fn f_p(&self, x: f64, u: f64, p: f64) -> f64 {
        (self.f_p)(x, u, p)
    }

    /// Largest relative mismatch between `f_p` and a central difference of
    /// `f` in `p` over `(x, u, p)` samples.
    pub fn derivative_mismatch(&self, samples: &[(f64, f64, f64)]) -> f64 {
        samples
            .iter()
            .map(|&(x, u, p)| {
                let h = 1e-6 * p.abs().max(1.0);
                let fd = (self.f(x, u, p + h) - self.f(x, u, p - h)) / (2.0 * h);
                let exact = self.f_p(x, u, p);
                (fd - exact).abs() / exact.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Diffusion coefficient `a` in `u_t = a u_xx + f`.
#[derive(Clone)]
pub enum Diffusivity {
    Constant(f64),
    Function(ScalarFn3),
}

impl fmt::Debug for Diffusivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffusivity::Constant(a) => write!(f, "Constant({a})"),
            Diffusivity::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Diffusivity {
    /// `a(x, u, p) = ā(u, p²/2)`.
    pub fn from_o2(a_bar: &NonlinearityO2) -> Self {
        let a = a_bar.clone();
        Diffusivity::Function(Arc::new(move |_, u, p| a.f_bar(u, 0.5 * p * p)))
    }

    #[inline]
    fn at(&self, x: f64, u: f64, p: f64) -> f64 {
        match self {
            Diffusivity::Constant(a) => *a,
            Diffusivity::Function(g) => g(x, u, p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    #[default]
    RK4Explicit,
    /// Backward Euler on diffusion, forward Euler on the nonlinearity.
    IMEXDiffusion,
}

/// Spatial differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Stencil {
    /// Second-order central differences.
    #[default]
    Central,
    /// Fourier collocation (periodic grids with even `n` only).
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub n: usize,
    /// Time step; `None` picks a stable explicit step from the grid.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub save_every: usize,
    pub scheme: Scheme,
    pub stencil: Stencil,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 256,
            dt: None,
            t_end: 1.0,
            save_every: 100,
            scheme: Scheme::RK4Explicit,
            stencil: Stencil::Central,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < crate::functional::MIN_GRID_POINTS {
            return Err(Error::InvalidConfig(format!("n = {} is below the minimum grid size", self.n)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.save_every == 0 {
            return Err(Error::InvalidConfig("save_every must be >= 1".into()));
        }
        Ok(())
    }

    /// The step actually used: explicit `dt` or `0.4 h² / a` (a quarter of
    /// `h²/a` for the Fourier stencil).
    pub fn resolved_dt(&self, domain_length: f64, bc: BoundaryCondition, a_scale: f64) -> f64 {
        self.dt.unwrap_or_else(|| {
            let h = crate::functional::grid_spacing(self.n, domain_length, bc);
            let c = match self.stencil {
                Stencil::Central => 0.4,
                Stencil::Fourier => 0.25,
            };
            c * h * h / a_scale.max(f64::MIN_POSITIVE)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    BlowUp { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub snapshots: Vec<ScalarField>,
    /// Right-hand side at the save times.
    pub u_t_snapshots: Vec<ScalarField>,
    /// Filled in by monitors; empty or one per save.
    pub reports: Vec<FunctionalReport>,
    pub status: RunStatus,
    pub dt: f64,
    pub steps: usize,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&ScalarField> {
        self.snapshots.last()
    }
}

/// Precomputed spatial operators for one grid.
pub(crate) struct Discretization<'a> {
    nl: &'a GeneralNonlinearity,
    a: Option<&'a Diffusivity>,
    n: usize,
    h: f64,
    bc: BoundaryCondition,
    stencil: Stencil,
    /// Dense Fourier differentiation matrices (row-major).
    d1: Vec<f64>,
    d2: Vec<f64>,
    xs: Vec<f64>,
}

impl<'a> Discretization<'a> {
    pub(crate) fn new(
        nl: &'a GeneralNonlinearity,
        a: Option<&'a Diffusivity>,
        n: usize,
        domain_length: f64,
        bc: BoundaryCondition,
        stencil: Stencil,
    ) -> Result<Self> {
        let h = crate::functional::grid_spacing(n, domain_length, bc);
        let (mut d1, mut d2) = (Vec::new(), Vec::new());
        if stencil == Stencil::Fourier {
            if bc != BoundaryCondition::Periodic || n % 2 != 0 {
                return Err(Error::InvalidConfig("Fourier stencil needs a periodic grid with even n".into()));
            }
            (d1, d2) = fourier_matrices(n, domain_length);
        }
        Ok(Self {
            nl,
            a,
            n,
            h,
            bc,
            stencil,
            d1,
            d2,
            xs: (0..n).map(|i| i as f64 * h).collect(),
        })
    }

    /// Writes `u_x`, `u_xx` into the scratch slices.
    fn derivatives(&self, u: &[f64], ux: &mut [f64], uxx: &mut [f64]) {
        let n = self.n;
        match self.stencil {
            Stencil::Fourier => {
                for i in 0..n {
                    let (r1, r2) = (&self.d1[i * n..(i + 1) * n], &self.d2[i * n..(i + 1) * n]);
                    let mut s1 = 0.0;
                    let mut s2 = 0.0;
                    for j in 0..n {
                        s1 += r1[j] * u[j];
                        s2 += r2[j] * u[j];
                    }
                    ux[i] = s1;
                    uxx[i] = s2;
                }
            }
            Stencil::Central => {
                let inv2h = 1.0 / (2.0 * self.h);
                let invh2 = 1.0 / (self.h * self.h);
                for i in 1..n - 1 {
                    ux[i] = (u[i + 1] - u[i - 1]) * inv2h;
                    uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * invh2;
                }
                match self.bc {
                    BoundaryCondition::Periodic => {
                        ux[0] = (u[1] - u[n - 1]) * inv2h;
                        uxx[0] = (u[1] - 2.0 * u[0] + u[n - 1]) * invh2;
                        ux[n - 1] = (u[0] - u[n - 2]) * inv2h;
                        uxx[n - 1] = (u[0] - 2.0 * u[n - 1] + u[n - 2]) * invh2;
                    }
                    BoundaryCondition::Dirichlet => {
                        ux[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2h;
                        ux[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * inv2h;
                        uxx[0] = 0.0;
                        uxx[n - 1] = 0.0;
                    }
                    BoundaryCondition::Neumann => {
                        ux[0] = 0.0;
                        ux[n - 1] = 0.0;
                        uxx[0] = 2.0 * (u[1] - u[0]) * invh2;
                        uxx[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * invh2;
                    }
                }
            }
        }
    }

    /// Full right-hand side, or only the nonlinearity when `explicit_only`.
    pub(crate) fn rhs_into(&self, u: &[f64], out: &mut [f64], ux: &mut [f64], uxx: &mut [f64], explicit_only: bool) {
        self.derivatives(u, ux, uxx);
        for i in 0..self.n {
            let x = self.xs[i];
            let f = self.nl.f(x, u[i], ux[i]);
            out[i] = if explicit_only {
                f
            } else {
                let a = self.a.map_or(1.0, |a| a.at(x, u[i], ux[i]));
                a * uxx[i] + f
            };
        }
        if self.bc == BoundaryCondition::Dirichlet {
            out[0] = 0.0;
            out[self.n - 1] = 0.0;
        }
    }

    fn max_diffusivity(&self, u: &[f64]) -> f64 {
        match self.a {
            None => 1.0,
            Some(Diffusivity::Constant(a)) => *a,
            Some(a) => {
                let mut ux = vec![0.0; self.n];
                let mut uxx = vec![0.0; self.n];
                self.derivatives(u, &mut ux, &mut uxx);
                (0..self.n).map(|i| a.at(self.xs[i], u[i], ux[i])).fold(0.0, f64::max)
            }
        }
    }

    /// Largest magnitude of the discrete second-derivative spectrum.
    fn laplacian_bound(&self) -> f64 {
        match self.stencil {
            Stencil::Central => 4.0 / (self.h * self.h),
            Stencil::Fourier => (std::f64::consts::PI / self.h).powi(2),
        }
    }
}

/// Fourier collocation differentiation matrices on `n` equispaced points
/// of a circle of length `ℓ` (n even).
fn fourier_matrices(n: usize, domain_length: f64) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let scale = 2.0 * std::f64::consts::PI / domain_length;
    let mut d1 = vec![0.0; n * n];
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let k = (i as isize - j as isize).rem_euclid(n as isize) as usize;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 {
                d2[i * n + j] = (-std::f64::consts::PI.powi(2) / (3.0 * h * h) - 1.0 / 6.0) * scale * scale;
            } else {
                let half = 0.5 * k as f64 * h;
                d1[i * n + j] = 0.5 * sign / half.tan() * scale;
                d2[i * n + j] = -0.5 * sign / half.sin().powi(2) * scale * scale;
            }
        }
    }
    (d1, d2)
}

/// `a u_xx + f` on the field's grid with central differences.
pub fn rhs(nl: &GeneralNonlinearity, a: Option<&Diffusivity>, field: &ScalarField) -> Result<ScalarField> {
    rhs_with_stencil(nl, a, field, Stencil::Central)
}

pub fn rhs_with_stencil(nl: &GeneralNonlinearity, a: Option<&Diffusivity>, field: &ScalarField, stencil: Stencil) -> Result<ScalarField> {
    let n = field.len();
    let disc = Discretization::new(nl, a, n, field.domain_length(), field.bc(), stencil)?;
    let mut out = vec![0.0; n];
    let (mut ux, mut uxx) = (vec![0.0; n], vec![0.0; n]);
    disc.rhs_into(field.values(), &mut out, &mut ux, &mut uxx, false);
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "right-hand side", index: i });
    }
    ScalarField::unchecked(out, field.domain_length(), field.bc())
}

/// Solve `(I - r L) v = b` where `L` is the second-difference operator for
/// the boundary condition and `r = dt a / h²`.
fn implicit_diffusion_solve(b: &[f64], r: f64, bc: BoundaryCondition) -> Vec<f64> {
    let n = b.len();
    match bc {
        BoundaryCondition::Periodic => cyclic_tridiagonal(-r, 1.0 + 2.0 * r, -r, b),
        BoundaryCondition::Dirichlet => {
            let m = n - 2;
            let lower = vec![-r; m];
            let diag = vec![1.0 + 2.0 * r; m];
            let upper = vec![-r; m];
            let inner = thomas(&lower, &diag, &upper, &b[1..n - 1]);
            let mut out = vec![0.0; n];
            out[1..n - 1].copy_from_slice(&inner);
            out
        }
        BoundaryCondition::Neumann => {
            let mut lower = vec![-r; n];
            let diag = vec![1.0 + 2.0 * r; n];
            let mut upper = vec![-r; n];
            upper[0] = -2.0 * r;
            lower[n - 1] = -2.0 * r;
            thomas(&lower, &diag, &upper, b)
        }
    }
}

/// Tridiagonal solve; `lower[0]` and `upper[n-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Constant-coefficient cyclic tridiagonal solve via Sherman–Morrison.
fn cyclic_tridiagonal(lo: f64, diag: f64, up: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let gamma = -diag;
    let mut d = vec![diag; n];
    d[0] = diag - gamma;
    d[n - 1] = diag - lo * up / gamma;
    let lower = vec![lo; n];
    let upper = vec![up; n];
    let x = thomas(&lower, &d, &upper, rhs);
    let mut uvec = vec![0.0; n];
    uvec[0] = gamma;
    uvec[n - 1] = lo;
    let z = thomas(&lower, &d, &upper, &uvec);
    let fact = (x[0] + up * x[n - 1] / gamma) / (1.0 + z[0] + up * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn is_blown_up(u: &[f64]) -> bool {
    u.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP_THRESHOLD)
}

/// Advance `u0` to `cfg.t_end`, saving every `cfg.save_every` steps and at
/// the end. Blow-up ends the run early with a partial record.
pub fn integrate(nl: &GeneralNonlinearity, a: Option<&Diffusivity>, u0: &ScalarField, cfg: &SolverConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if u0.len() != cfg.n {
        return Err(Error::InvalidConfig(format!(
            "initial field has {} points, solver expects {}",
            u0.len(),
            cfg.n
        )));
    }
    let a_const = match a {
        None => Some(1.0),
        Some(Diffusivity::Constant(c)) => {
            if !(*c > 0.0) {
                return Err(Error::Domain(format!("diffusion coefficient {c} not positive")));
            }
            Some(*c)
        }
        Some(Diffusivity::Function(_)) => None,
    };
    if cfg.scheme == Scheme::IMEXDiffusion && (a_const.is_none() || cfg.stencil != Stencil::Central) {
        return Err(Error::InvalidConfig(
            "IMEX scheme supports constant diffusion with the central stencil only".into(),
        ));
    }

    let n = cfg.n;
    let (ell, bc) = (u0.domain_length(), u0.bc());
    let disc = Discretization::new(nl, a, n, ell, bc, cfg.stencil)?;
    let a_max = disc.max_diffusivity(u0.values());
    let stiff = a_max * disc.laplacian_bound();
    let nominal_dt = cfg.resolved_dt(ell, bc, a_max);
    let steps = (cfg.t_end / nominal_dt).ceil().max(1.0) as usize;
    let dt = cfg.t_end / steps as f64;
    if cfg.scheme == Scheme::RK4Explicit && dt * stiff > RK4_STABILITY {
        log::warn!(
            "dt = {dt:e} exceeds the RK4 diffusion limit {:e}; proceeding",
            RK4_STABILITY / stiff
        );
    }

    let mut u = u0.values().to_vec();
    let (mut ux, mut uxx) = (vec![0.0; n], vec![0.0; n]);
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut stage = vec![0.0; n];
    let mut ut = vec![0.0; n];

    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        snapshots: Vec::new(),
        u_t_snapshots: Vec::new(),
        reports: Vec::new(),
        status: RunStatus::Completed,
        dt,
        steps: 0,
    };

    let save = |rec: &mut TrajectoryRecord, t: f64, u: &[f64], ux: &mut [f64], uxx: &mut [f64], ut: &mut [f64]| -> Result<()> {
        disc.rhs_into(u, ut, ux, uxx, false);
        rec.times.push(t);
        rec.snapshots.push(ScalarField::unchecked(u.to_vec(), ell, bc)?);
        rec.u_t_snapshots.push(ScalarField::unchecked(ut.to_vec(), ell, bc)?);
        Ok(())
    };

    if is_blown_up(&u) {
        return Err(Error::Domain("initial field is not finite or exceeds the blow-up threshold".into()));
    }
    save(&mut rec, 0.0, &u, &mut ux, &mut uxx, &mut ut)?;

    for step in 1..=steps {
        match cfg.scheme {
            Scheme::RK4Explicit => {
                disc.rhs_into(&u, &mut k[0], &mut ux, &mut uxx, false);
                for i in 0..n {
                    stage[i] = u[i] + 0.5 * dt * k[0][i];
                }
                disc.rhs_into(&stage, &mut k[1], &mut ux, &mut uxx, false);
                for i in 0..n {
                    stage[i] = u[i] + 0.5 * dt * k[1][i];
                }
                disc.rhs_into(&stage, &mut k[2], &mut ux, &mut uxx, false);
                for i in 0..n {
                    stage[i] = u[i] + dt * k[2][i];
                }
                disc.rhs_into(&stage, &mut k[3], &mut ux, &mut uxx, false);
                for i in 0..n {
                    u[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
                }
            }
            Scheme::IMEXDiffusion => {
                disc.rhs_into(&u, &mut k[0], &mut ux, &mut uxx, true);
                for i in 0..n {
                    stage[i] = u[i] + dt * k[0][i];
                }
                let r = dt * a_const.unwrap_or(1.0) / (disc.h * disc.h);
                u = implicit_diffusion_solve(&stage, r, bc);
            }
        }
        rec.steps = step;
        let t = if step == steps { cfg.t_end } else { step as f64 * dt };
        if is_blown_up(&u) {
            rec.status = RunStatus::BlowUp { t };
            return Ok(rec);
        }
        if step % cfg.save_every == 0 || step == steps {
            save(&mut rec, t, &u, &mut ux, &mut uxx, &mut ut)?;
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn heat() -> GeneralNonlinearity {
        GeneralNonlinearity::new("zero", |_, _, _| 0.0, |_, _, _| 0.0, true)
    }

    #[test]
    fn laplacian_of_sine() {
        let f = ScalarField::from_fn(256, 1.0, BoundaryCondition::Periodic, |x| (2.0 * PI * x).sin()).unwrap();
        let r = rhs(&heat(), None, &f).unwrap();
        let err = (0..256)
            .map(|i| (r.values()[i] + 4.0 * PI * PI * (2.0 * PI * f.x(i)).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-2, "{err}");
    }

    #[test]
    fn constants_and_fixed_points() {
        let f = ScalarField::from_fn(32, 1.0, BoundaryCondition::Periodic, |_| 0.7).unwrap();
        assert!(rhs(&heat(), None, &f).unwrap().values().iter().all(|v| *v == 0.0));
        let ci = GeneralNonlinearity::from_o2(&NonlinearityO2::chafee_infante(2.0));
        let z = ScalarField::from_fn(32, 1.0, BoundaryCondition::Periodic, |_| 0.0).unwrap();
        assert!(rhs(&ci, None, &z).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn heat_equation_decay() {
        let u0 = ScalarField::from_fn(256, 1.0, BoundaryCondition::Periodic, |x| (2.0 * PI * x).sin()).unwrap();
        let cfg = SolverConfig { t_end: 0.01, save_every: 1000, ..Default::default() };
        let rec = integrate(&heat(), None, &u0, &cfg).unwrap();
        let amp = rec.last().unwrap().values()[64];
        let exact = (-4.0 * PI * PI * 0.01f64).exp();
        assert!(((amp - exact) / exact).abs() <= 1e-2);
    }

    #[test]
    fn heat_mean_is_conserved() {
        let u0 = ScalarField::from_fn(64, 1.0, BoundaryCondition::Periodic, |x| 1.0 + (2.0 * PI * x).cos() + 0.3 * (6.0 * PI * x).sin()).unwrap();
        let cfg = SolverConfig { n: 64, t_end: 0.5, save_every: 50, ..Default::default() };
        let rec = integrate(&heat(), None, &u0, &cfg).unwrap();
        let m0: f64 = u0.values().iter().sum::<f64>() / 64.0;
        for s in &rec.snapshots {
            let m: f64 = s.values().iter().sum::<f64>() / 64.0;
            assert!((m - m0).abs() < 1e-10 * 0.5 + 1e-14);
        }
    }

    #[test]
    fn imex_matches_rk4_on_heat() {
        let u0 = ScalarField::from_fn(64, 1.0, BoundaryCondition::Periodic, |x| (2.0 * PI * x).cos()).unwrap();
        let cfg = SolverConfig { n: 64, t_end: 0.05, save_every: 1_000_000, scheme: Scheme::IMEXDiffusion, dt: Some(1e-5), ..Default::default() };
        let rec = integrate(&heat(), None, &u0, &cfg).unwrap();
        let exact = (-4.0 * PI * PI * 0.05f64).exp();
        assert!((rec.last().unwrap().values()[0] - exact).abs() < 2e-3);
    }

    #[test]
    fn imex_dirichlet_and_neumann() {
        let d0 = ScalarField::from_fn(65, 1.0, BoundaryCondition::Dirichlet, |x| (PI * x).sin()).unwrap();
        let cfg = SolverConfig { n: 65, t_end: 0.1, save_every: 1_000_000, scheme: Scheme::IMEXDiffusion, dt: Some(1e-5), ..Default::default() };
        let rec = integrate(&heat(), None, &d0, &cfg).unwrap();
        let exact = (-PI * PI * 0.1f64).exp();
        assert!((rec.last().unwrap().values()[32] - exact).abs() < 2e-3);

        let n0 = ScalarField::from_fn(65, 1.0, BoundaryCondition::Neumann, |x| (PI * x).cos()).unwrap();
        let rec = integrate(&heat(), None, &n0, &cfg).unwrap();
        assert!((rec.last().unwrap().values()[0] - exact).abs() < 2e-3);
    }

    #[test]
    fn cyclic_solver_inverts_operator() {
        let b: Vec<f64> = (0..11).map(|i| (i as f64 * 0.7).sin()).collect();
        let r = 0.8;
        let x = cyclic_tridiagonal(-r, 1.0 + 2.0 * r, -r, &b);
        for i in 0..11 {
            let ip = (i + 1) % 11;
            let im = (i + 10) % 11;
            let ax = (1.0 + 2.0 * r) * x[i] - r * (x[ip] + x[im]);
            assert!((ax - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_stencil_is_exact_on_low_modes() {
        let ell = 2.0 * PI;
        let f = ScalarField::from_fn(32, ell, BoundaryCondition::Periodic, |x| x.cos() + 0.5 * (3.0 * x).sin()).unwrap();
        let r = rhs_with_stencil(&heat(), None, &f, Stencil::Fourier).unwrap();
        for i in 0..32 {
            let x = f.x(i);
            let exact = -x.cos() - 4.5 * (3.0 * x).sin();
            assert!((r.values()[i] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn blow_up_is_recorded() {
        let nl = GeneralNonlinearity::new("cube", |_, u, _| u * u * u, |_, _, _| 0.0, true);
        let u0 = ScalarField::from_fn(16, 1.0, BoundaryCondition::Periodic, |_| 2.0).unwrap();
        let cfg = SolverConfig { n: 16, t_end: 1.0, save_every: 10, ..Default::default() };
        let rec = integrate(&nl, None, &u0, &cfg).unwrap();
        match rec.status {
            RunStatus::BlowUp { t } => assert!(t > 0.1 && t < 0.2),
            s => panic!("{s:?}"),
        }
        assert!(!rec.is_empty());
    }

    #[test]
    fn grid_rotation_commutes_with_integration() {
        let nl = GeneralNonlinearity::from_o2(&NonlinearityO2::saturating(0.5));
        let u0 = ScalarField::from_fn(32, 1.0, BoundaryCondition::Periodic, |x| (2.0 * PI * x).sin() + 0.4 * (4.0 * PI * x).cos()).unwrap();
        let cfg = SolverConfig { n: 32, t_end: 0.05, save_every: 1_000_000, ..Default::default() };
        let a = integrate(&nl, None, &u0.rotated(5), &cfg).unwrap();
        let b = integrate(&nl, None, &u0, &cfg).unwrap();
        assert_eq!(a.last().unwrap().values(), b.last().unwrap().rotated(5).values());
    }

    #[test]
    fn invalid_configs() {
        let u0 = ScalarField::from_fn(16, 1.0, BoundaryCondition::Periodic, |_| 0.0).unwrap();
        let bad_n = SolverConfig { n: 32, ..Default::default() };
        assert!(integrate(&heat(), None, &u0, &bad_n).is_err());
        let bad_dt = SolverConfig { n: 16, dt: Some(-1.0), ..Default::default() };
        assert!(integrate(&heat(), None, &u0, &bad_dt).is_err());
        let imex_fn = SolverConfig { n: 16, scheme: Scheme::IMEXDiffusion, ..Default::default() };
        let a = Diffusivity::Function(Arc::new(|_, _, _| 1.0));
        assert!(integrate(&heat(), Some(&a), &u0, &imex_fn).is_err());
    }
}
