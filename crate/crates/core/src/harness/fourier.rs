//! Fourier projections of periodic fields and shift matching by
//! trigonometric interpolation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{BoundaryCondition, ScalarField};

fn require_periodic(field: &ScalarField) -> Result<()> {
    if field.bc() != BoundaryCondition::Periodic {
        return Err(Error::Domain(format!(
            "Fourier projection needs a periodic field, got {:?}",
            field.bc()
        )));
    }
    Ok(())
}

/// `(2/ℓ) ∫ u cos(kx)`, `(2/ℓ) ∫ u sin(kx)` with `k = 2π·mode/ℓ`, by the
/// rectangle rule. On `ℓ = 2π` these are the usual `(1/π) ∫ u cos(mode x)`.
pub fn fourier_project(field: &ScalarField, mode: usize) -> Result<(f64, f64)> {
    require_periodic(field)?;
    let ell = field.domain_length();
    let k = 2.0 * PI * mode as f64 / ell;
    let (mut a, mut b) = (0.0, 0.0);
    for (i, &u) in field.values().iter().enumerate() {
        let (s, c) = (k * field.x(i)).sin_cos();
        a += u * c;
        b += u * s;
    }
    let w = 2.0 * field.spacing() / ell;
    Ok((a * w, b * w))
}

/// `‖u - P u‖∞` where `P` projects onto `span{cos kx, sin kx}` for the
/// given modes (constants are not in the span).
pub fn off_span_residual(field: &ScalarField, modes: &[usize]) -> Result<f64> {
    require_periodic(field)?;
    let coeffs: Vec<(f64, f64, f64)> = modes
        .iter()
        .map(|&m| fourier_project(field, m).map(|(a, b)| (2.0 * PI * m as f64 / field.domain_length(), a, b)))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, &u) in field.values().iter().enumerate() {
        let x = field.x(i);
        let mut p = 0.0;
        for &(k, a, b) in &coeffs {
            let (s, c) = (k * x).sin_cos();
            p += a * c + b * s;
        }
        worst = worst.max((u - p).abs());
    }
    Ok(worst)
}

/// Real trigonometric interpolant of a periodic grid function.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    ell: f64,
    mean: f64,
    // (wavenumber, cos coefficient, sin coefficient)
    terms: Vec<(f64, f64, f64)>,
}

impl TrigInterpolant {
    pub fn new(field: &ScalarField) -> Result<Self> {
        require_periodic(field)?;
        let n = field.len();
        let ell = field.domain_length();
        let mean = field.values().iter().sum::<f64>() / n as f64;
        let mut terms = Vec::with_capacity(n / 2);
        for m in 1..=n / 2 {
            let k = 2.0 * PI * m as f64 / ell;
            let (mut a, mut b) = (0.0, 0.0);
            for (i, &u) in field.values().iter().enumerate() {
                let (s, c) = (k * field.x(i)).sin_cos();
                a += u * c;
                b += u * s;
            }
            if 2 * m == n {
                // Nyquist mode carries half weight and no sine part.
                terms.push((k, a / n as f64, 0.0));
            } else {
                terms.push((k, 2.0 * a / n as f64, 2.0 * b / n as f64));
            }
        }
        Ok(Self { ell, mean, terms })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.mean + self.terms.iter().map(|&(k, a, b)| {
            let (s, c) = (k * x).sin_cos();
            a * c + b * s
        }).sum::<f64>()
    }

    pub fn domain_length(&self) -> f64 {
        self.ell
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftMatch {
    /// Shift in `[0, ℓ)` minimizing the mismatch.
    pub theta: f64,
    /// `max_i |u(x_i) - u_ref(x_i - θ)|`.
    pub error: f64,
}

fn shifted_error(reference: &TrigInterpolant, field: &ScalarField, theta: f64, sup: bool) -> f64 {
    let mut acc: f64 = 0.0;
    for (i, &u) in field.values().iter().enumerate() {
        let d = u - reference.eval(field.x(i) - theta);
        if sup {
            acc = acc.max(d.abs());
        } else {
            acc += d * d;
        }
    }
    acc
}

/// `min_θ ‖u(·) - u_ref(· - θ)‖∞` over continuous shifts. The coarse search
/// runs over grid shifts; a golden-section search then refines the
/// least-squares mismatch within one grid cell.
pub fn best_shift(reference: &ScalarField, field: &ScalarField) -> Result<ShiftMatch> {
    require_periodic(field)?;
    if !reference.same_grid(field) {
        return Err(Error::Domain("shift matching needs fields on the same grid".into()));
    }
    let n = field.len();
    let h = field.spacing();
    let ell = field.domain_length();
    let mut best_k = 0;
    let mut best_err = f64::INFINITY;
    for k in 0..n {
        let r = reference.rotated(k);
        let e: f64 = r.values().iter().zip(field.values()).map(|(a, b)| (a - b) * (a - b)).sum();
        if e < best_err {
            best_err = e;
            best_k = k;
        }
    }
    let interp = TrigInterpolant::new(reference)?;
    let centre = best_k as f64 * h;
    let (mut lo, mut hi) = (centre - h, centre + h);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = shifted_error(&interp, field, c, false);
    let mut fd = shifted_error(&interp, field, d, false);
    while hi - lo > 1e-12 * ell {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = shifted_error(&interp, field, c, false);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = shifted_error(&interp, field, d, false);
        }
    }
    let theta = (0.5 * (lo + hi)).rem_euclid(ell);
    Ok(ShiftMatch {
        theta,
        error: shifted_error(&interp, field, theta, true),
    })
}
