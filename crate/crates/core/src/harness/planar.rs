//! Planar vector fields `(ȧ, ḃ) = (g, h)` and their embedding as an
//! `x`-dependent nonlinearity on the circle of length `2π`, for which the
//! plane `span{cos x, sin x}` is invariant.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charflow::ScalarFn2;
use crate::error::{Error, Result};
use crate::ode::{self, Control, Tolerances};
use crate::pde::GeneralNonlinearity;

pub type Gradient2 = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
const SYMMETRY_SAMPLES: usize = 256;
const FD_STEP: f64 = 1e-6;

#[derive(Clone)]
pub struct PlanarField {
    label: String,
    g: ScalarFn2,
    h: ScalarFn2,
    grad_g: Option<Gradient2>,
    grad_h: Option<Gradient2>,
}

impl fmt::Debug for PlanarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarField").field("label", &self.label).finish_non_exhaustive()
    }
}

impl PlanarField {
    /// Field without analytic partials; they are taken by central differences.
    pub fn new<G, H>(label: impl Into<String>, g: G, h: H) -> Self
    where
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            g: Arc::new(g),
            h: Arc::new(h),
            grad_g: None,
            grad_h: None,
        }
    }

    pub fn with_gradients<G, H>(mut self, grad_g: G, grad_h: H) -> Self
    where
        G: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
        H: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        self.grad_g = Some(Arc::new(grad_g));
        self.grad_h = Some(Arc::new(grad_h));
        self
    }

    pub fn zero() -> Self {
        Self::new("zero", |_, _| 0.0, |_, _| 0.0).with_gradients(|_, _| (0.0, 0.0), |_, _| (0.0, 0.0))
    }

    /// `g = (1 - b²)/2`, `h = ab`: a centre at `(0, 1)`.
    pub fn center() -> Self {
        Self::new("center", |_, b| 0.5 * (1.0 - b * b), |a, b| a * b)
            .with_gradients(|_, b| (0.0, -b), |a, b| (b, a))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn g(&self, a: f64, b: f64) -> f64 {
        (self.g)(a, b)
    }

    pub fn h(&self, a: f64, b: f64) -> f64 {
        (self.h)(a, b)
    }

    pub fn rhs(&self, a: f64, b: f64) -> [f64; 2] {
        [self.g(a, b), self.h(a, b)]
    }

    pub fn grad_g(&self, a: f64, b: f64) -> (f64, f64) {
        match &self.grad_g {
            Some(d) => d(a, b),
            None => central_gradient(&*self.g, a, b),
        }
    }

    pub fn grad_h(&self, a: f64, b: f64) -> (f64, f64) {
        match &self.grad_h {
            Some(d) => d(a, b),
            None => central_gradient(&*self.h, a, b),
        }
    }

    /// Largest violation of `g(a,-b) = g(a,b)`, `h(a,-b) = -h(a,b)` on
    /// seeded samples from `[-2, 2]²`, relative to the field scale.
    pub fn symmetry_defect(&self, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..SYMMETRY_SAMPLES {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-2.0..2.0);
            let (g, h) = (self.g(a, b), self.h(a, b));
            let scale = 1.0 + g.abs().max(h.abs());
            let d = (self.g(a, -b) - g).abs().max((self.h(a, -b) + h).abs()) / scale;
            worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        }
        worst
    }
}

fn central_gradient(f: &(dyn Fn(f64, f64) -> f64 + Send + Sync), a: f64, b: f64) -> (f64, f64) {
    let ha = FD_STEP * a.abs().max(1.0);
    let hb = FD_STEP * b.abs().max(1.0);
    (
        (f(a + ha, b) - f(a - ha, b)) / (2.0 * ha),
        (f(a, b + hb) - f(a, b - hb)) / (2.0 * hb),
    )
}

/// `f(x, u, p) = (A + g(A, B)) cos x + (B + h(A, B)) sin x` with
/// `A = u cos x - p sin x`, `B = u sin x + p cos x`.
pub fn embed_planar(pf: &PlanarField) -> Result<GeneralNonlinearity> {
    let defect = pf.symmetry_defect(0x5eed);
    if !(defect <= SYMMETRY_TOLERANCE) {
        return Err(Error::Domain(format!(
            "planar field '{}' is not reflection symmetric (defect {defect:.3e}); embedding refused",
            pf.label
        )));
    }
    let f_field = pf.clone();
    let fp_field = pf.clone();
    Ok(GeneralNonlinearity::new(
        format!("embedded {}", pf.label),
        move |x, u, p| {
            let (s, c) = x.sin_cos();
            let (a, b) = (u * c - p * s, u * s + p * c);
            (a + f_field.g(a, b)) * c + (b + f_field.h(a, b)) * s
        },
        move |x, u, p| {
            let (s, c) = x.sin_cos();
            let (a, b) = (u * c - p * s, u * s + p * c);
            let (g_a, g_b) = fp_field.grad_g(a, b);
            let (h_a, h_b) = fp_field.grad_h(a, b);
            // A_p = -s, B_p = c
            (-s + g_b * c - g_a * s) * c + (c + h_b * c - h_a * s) * s
        },
        true,
    ))
}

/// State of the planar system at time `t`.
pub fn planar_flow(pf: &PlanarField, start: (f64, f64), t: f64, tol: &Tolerances) -> Result<(f64, f64)> {
    let out = ode::integrate(|_, y| pf.rhs(y[0], y[1]), 0.0, [start.0, start.1], t, tol, |_, _| Control::Continue)
        .map_err(|f| Error::Integration { at: f.t, source: f.error })?;
    Ok((out.y[0], out.y[1]))
}

/// Samples of the planar orbit at `times` (ascending, starting at or after 0).
pub fn planar_samples(pf: &PlanarField, start: (f64, f64), times: &[f64], tol: &Tolerances) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut y = start;
    for &tk in times {
        y = planar_flow(pf, y, tk - t, tol)?;
        t = tk;
        out.push(y);
    }
    Ok(out)
}

/// Return time of the orbit through `start` to the section `a = a(start)`,
/// crossed in the same direction as at departure.
pub fn planar_period(pf: &PlanarField, start: (f64, f64), t_max: f64, tol: &Tolerances) -> Result<f64> {
    let dir = pf.g(start.0, start.1);
    if dir == 0.0 {
        return Err(Error::Domain("orbit is tangent to the return section at its start".into()));
    }
    let sigma = |y: &[f64; 2]| dir.signum() * (y[0] - start.0);
    let mut prev: Option<(f64, [f64; 2])> = None;
    let mut left_section = false;
    let mut bracket = None;
    ode::integrate(|_, y| pf.rhs(y[0], y[1]), 0.0, [start.0, start.1], t_max, tol, |t, y| {
        if let Some((tp, yp)) = prev {
            let (sp, s) = (sigma(&yp), sigma(y));
            // The orbit first moves to sigma > 0, then returns through sigma = 0 upward.
            if s > 0.0 && !left_section {
                left_section = true;
            } else if left_section && sp < 0.0 && s >= 0.0 {
                bracket = Some((tp, yp, t));
                return Control::Stop;
            }
        }
        prev = Some((t, *y));
        Control::Continue
    })
    .map_err(|f| Error::Integration { at: f.t, source: f.error })?;
    let (t0, y0, t1) = bracket.ok_or_else(|| Error::Domain(format!("orbit did not return within t = {t_max}")))?;
    let (mut lo, mut hi) = (0.0, t1 - t0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let y = planar_flow(pf, (y0[0], y0[1]), mid, tol)?;
        if sigma(&[y.0, y.1]) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * t1 {
            break;
        }
    }
    Ok(t0 + 0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> Tolerances {
        Tolerances {
            rel: 1e-12,
            abs: 1e-14,
            max_steps: 1_000_000,
        }
    }

    fn energy(a: f64, b: f64) -> f64 {
        0.5 * a * a + 0.25 * b * b - 0.5 * b.ln()
    }

    #[test]
    fn center_is_symmetric() {
        assert!(PlanarField::center().symmetry_defect(1) <= SYMMETRY_TOLERANCE);
        assert!(PlanarField::zero().symmetry_defect(2) == 0.0);
    }

    #[test]
    fn asymmetric_field_refused() {
        let pf = PlanarField::new("tilted", |_, b| b, |a, _| a);
        assert!(pf.symmetry_defect(3) > 1e-3);
        assert!(matches!(embed_planar(&pf), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_field_embeds_to_identity() {
        let f = embed_planar(&PlanarField::zero()).unwrap();
        for &(x, u, p) in &[(0.3, 1.2, -0.4), (2.0, -0.7, 0.9), (5.5, 0.1, 0.0)] {
            assert!((f.f(x, u, p) - u).abs() < 1e-14);
            assert!(f.f_p(x, u, p).abs() < 1e-14);
        }
    }

    #[test]
    fn embedding_has_reflection_symmetry() {
        let f = embed_planar(&PlanarField::center()).unwrap();
        for &(x, u, p) in &[(0.3, 1.2, -0.4), (2.0, -0.7, 0.9), (5.5, 0.1, 0.3)] {
            assert!((f.f(-x, u, -p) - f.f(x, u, p)).abs() < 1e-13);
        }
    }

    #[test]
    fn chain_rule_matches_finite_difference() {
        let f = embed_planar(&PlanarField::center()).unwrap();
        let samples = [(0.3, 1.2, -0.4), (2.0, -0.7, 0.9), (5.5, 0.1, 0.3), (4.0, 1.5, 1.5)];
        assert!(f.derivative_mismatch(&samples) < 1e-7);
        // finite-difference partials of g, h give the same f_p
        let pf = PlanarField::center();
        let bare = PlanarField::new("center-fd", move |a, b| pf.g(a, b), |a, b| a * b);
        let g = embed_planar(&bare).unwrap();
        for &(x, u, p) in &samples {
            assert!((g.f_p(x, u, p) - f.f_p(x, u, p)).abs() < 1e-7);
        }
    }

    #[test]
    fn center_orbit_conserves_energy_and_closes() {
        let pf = PlanarField::center();
        let start = (0.2, 1.1);
        let period = planar_period(&pf, start, 100.0, &tight()).unwrap();
        assert!(period > 1.0 && period < 20.0, "period {period}");
        let times: Vec<f64> = (1..=40).map(|k| period * k as f64 / 40.0).collect();
        let orbit = planar_samples(&pf, start, &times, &tight()).unwrap();
        let h0 = energy(start.0, start.1);
        for &(a, b) in &orbit {
            assert!((energy(a, b) - h0).abs() < 1e-8);
        }
        let end = orbit.last().unwrap();
        assert!((end.0 - start.0).abs() < 1e-8 && (end.1 - start.1).abs() < 1e-8, "{end:?}");
    }

    #[test]
    fn rest_point_has_no_period() {
        assert!(planar_period(&PlanarField::center(), (0.0, 1.0), 10.0, &tight()).is_err());
    }
}
