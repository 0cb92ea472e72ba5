#![allow(dead_code)]

use o2lyap::charflow::{CharflowConfig, NonlinearityO2};
use o2lyap::error::Result;

/// Nonlinearities exercised by the property tests.
pub fn nonlinearities() -> Vec<NonlinearityO2> {
    vec![
        NonlinearityO2::chafee_infante(15.0),
        NonlinearityO2::chafee_infante_coupled(15.0, 1.0),
        NonlinearityO2::linear_in_q(0.7),
        NonlinearityO2::gradient_quadratic(-1.0, 1.0),
        NonlinearityO2::saturating(0.8),
    ]
}

/// Tight tolerances so that second differences of `L` stay above the noise.
pub fn tight() -> CharflowConfig {
    CharflowConfig {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        ..CharflowConfig::default()
    }
}

pub fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

pub fn central<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

pub fn mixed<F: Fn(f64, f64) -> Result<f64>>(f: F, x: f64, y: f64, h: f64) -> Result<f64> {
    Ok((f(x + h, y + h)? - f(x + h, y - h)? - f(x - h, y + h)? + f(x - h, y - h)?) / (4.0 * h * h))
}

pub fn second<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h))
}

/// Fourth-order first derivative.
pub fn central4<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    Ok((-f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?) / (12.0 * h))
}

/// Fourth-order mixed derivative, the first-derivative stencil in each variable.
pub fn mixed4<F: Fn(f64, f64) -> Result<f64>>(f: F, x: f64, y: f64, h: f64) -> Result<f64> {
    central4(|a| central4(|b| f(a, b), y, h), x, h)
}
