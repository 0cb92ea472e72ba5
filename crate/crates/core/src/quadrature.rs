//! Composite Simpson and composite Gauss–Legendre rules on `[a, b]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points per panel for the composite Gauss–Legendre rule.
pub const GAUSS_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureRule {
    CompositeSimpson,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rule: QuadratureRule,
    /// Panels for the integrals over the gradient variable.
    pub panels: usize,
    /// Panels for the integral over the state variable (the primitive).
    pub nested_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::GaussLegendre,
            panels: 16,
            nested_panels: 16,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels < 2 || self.nested_panels < 2 {
            return Err(Error::InvalidConfig("quadrature panels must be >= 2".into()));
        }
        if self.rule == QuadratureRule::CompositeSimpson && (self.panels % 2 != 0 || self.nested_panels % 2 != 0) {
            return Err(Error::InvalidConfig("Simpson panels must be even".into()));
        }
        Ok(())
    }
}

/// A rule stored as nodes and weights on the reference interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn new(rule: QuadratureRule, panels: usize) -> Result<Self> {
        match rule {
            QuadratureRule::CompositeSimpson => Self::simpson(panels),
            QuadratureRule::GaussLegendre => Self::gauss_legendre(panels, GAUSS_POINTS),
        }
    }

    pub fn simpson(panels: usize) -> Result<Self> {
        if panels < 2 || panels % 2 != 0 {
            return Err(Error::InvalidConfig(format!("Simpson needs an even panel count >= 2, got {panels}")));
        }
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels + 1);
        let mut weights = Vec::with_capacity(panels + 1);
        for i in 0..=panels {
            nodes.push(i as f64 * h);
            let w = if i == 0 || i == panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            weights.push(w * h / 3.0);
        }
        Ok(Self { nodes, weights })
    }

    pub fn gauss_legendre(panels: usize, points: usize) -> Result<Self> {
        if panels == 0 || points == 0 {
            return Err(Error::InvalidConfig("Gauss-Legendre needs panels >= 1 and points >= 1".into()));
        }
        let (x, w) = legendre_nodes(points);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * points);
        let mut weights = Vec::with_capacity(panels * points);
        for p in 0..panels {
            let left = p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(left + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reference nodes on `[0, 1]`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f`, with `b < a` allowed. The integrand may fail.
    pub fn try_integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let len = b - a;
        if len == 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(a + len * t)?;
        }
        Ok(len * acc)
    }

    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        self.try_integrate(a, b, |x| Ok(f(x))).expect("infallible integrand")
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on P_n.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            return (vec![0.0], vec![2.0]);
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let q = Quadrature::simpson(2).unwrap();
        let v = q.integrate(-1.0, 2.0, |x| 4.0 * x * x * x - x + 1.0);
        // x^4 - x^2/2 + x on [-1, 2]
        let exact = (16.0 - 2.0 + 2.0) - (1.0 - 0.5 - 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_five_points() {
        let (x, w) = legendre_nodes(5);
        assert!((x[2]).abs() < 1e-15);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-14);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // exact through degree 9
        let q = Quadrature::gauss_legendre(1, 5).unwrap();
        let v = q.integrate(0.0, 1.0, |t| t.powi(9));
        assert!((v - 0.1).abs() < 1e-15);
    }

    #[test]
    fn reversed_interval_flips_sign() {
        let q = Quadrature::new(QuadratureRule::GaussLegendre, 4).unwrap();
        let a = q.integrate(0.0, 1.3, f64::exp);
        let b = q.integrate(1.3, 0.0, f64::exp);
        assert!((a + b).abs() < 1e-15 * a.abs());
        assert!((a - (1.3f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn odd_simpson_panels_rejected() {
        assert!(Quadrature::simpson(3).is_err());
        let cfg = QuadratureConfig { rule: QuadratureRule::CompositeSimpson, panels: 7, nested_panels: 8 };
        assert!(cfg.validate().is_err());
    }
}
