//! Adaptive Dormand–Prince 5(4) integration for small fixed-size systems.
//!
//! The integrator advances `y' = rhs(t, y)` from `t0` to `t1` in either
//! direction with a PI step-size controller. After each accepted step an
//! observer is called; it can stop the integration early (used for escape
//! detection and for sampling along a trajectory).

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OdeError {
    #[error("step limit of {max_steps} exhausted")]
    StepLimit { max_steps: usize },
    #[error("right-hand side is not finite")]
    NonFinite,
    #[error("step size underflow")]
    StepUnderflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// Set when the observer requested an early stop.
    pub stopped: bool,
}

/// Failure carrying the last accepted time.
#[derive(Debug, Clone, Copy)]
pub struct Failure {
    pub t: f64,
    pub error: OdeError,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller constants (Hairer & Wanner defaults for DOPRI5).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

fn all_finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn error_norm<const N: usize>(y: &[f64; N], y_new: &[f64; N], err: &[f64; N], tol: &Tolerances) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let sc = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
        let r = err[i] / sc;
        sum += r * r;
    }
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(rhs: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64, span: f64, tol: &Tolerances) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = tol.abs + tol.rel * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(span);
    let y1 = axpy(y0, dir * h, &[(1.0, f0)]);
    let f1 = rhs(t0 + dir * h, &y1);
    if !all_finite(&f1) {
        return (h * 1e-3).max(f64::EPSILON * t0.abs().max(1.0));
    }
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = tol.abs + tol.rel * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(span)
}

/// Integrate from `t0` to `t1`. The observer sees every accepted state,
/// including the initial one.
pub fn integrate<const N: usize, F, O>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: &Tolerances,
    mut observe: O,
) -> Result<Outcome<N>, Failure>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]) -> Control,
{
    let mut out = Outcome {
        t: t0,
        y: y0,
        accepted: 0,
        rejected: 0,
        stopped: false,
    };
    if observe(t0, &y0) == Control::Stop {
        out.stopped = true;
        return Ok(out);
    }
    if t0 == t1 {
        return Ok(out);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    if !all_finite(&k1) {
        return Err(Failure { t, error: OdeError::NonFinite });
    }
    let mut h = initial_step(&mut rhs, t0, &y0, &k1, dir, span, tol);
    let mut fac_old = 1e-4_f64;
    let mut last_rejected = false;

    loop {
        if out.accepted + out.rejected >= tol.max_steps {
            return Err(Failure {
                t,
                error: OdeError::StepLimit { max_steps: tol.max_steps },
            });
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) && !last {
            return Err(Failure { t, error: OdeError::StepUnderflow });
        }
        let hs = dir * h;

        let y2 = axpy(&y, hs, &[(A21, &k1)]);
        let k2 = rhs(t + C2 * hs, &y2);
        let y3 = axpy(&y, hs, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + C3 * hs, &y3);
        let y4 = axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + C4 * hs, &y4);
        let y5 = axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + C5 * hs, &y5);
        let y6 = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = rhs(t + hs, &y6);
        let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t1 } else { t + hs };
        let k7 = rhs(t_new, &y_new);

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&y, &y_new, &err, tol);

        if !en.is_finite() || !all_finite(&y_new) || !all_finite(&k7) {
            // Blow-up inside the trial step: shrink hard and retry.
            out.rejected += 1;
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        let fac11 = en.powf(EXPO1);
        if en <= 1.0 {
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            fac_old = en.max(1e-4);
            out.accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            last_rejected = false;
            if observe(t, &y) == Control::Stop {
                out.t = t;
                out.y = y;
                out.stopped = true;
                return Ok(out);
            }
            if last {
                out.t = t;
                out.y = y;
                return Ok(out);
            }
            h = h_new;
        } else {
            out.rejected += 1;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_observe<const N: usize>(_: f64, _: &[f64; N]) -> Control {
        Control::Continue
    }

    #[test]
    fn exponential_decay_forward_and_backward() {
        let tol = Tolerances::default();
        let fwd = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 3.0, &tol, no_observe).unwrap();
        assert!((fwd.y[0] - (-3.0f64).exp()).abs() < 1e-10);
        let bwd = integrate(|_, y: &[f64; 1]| [-y[0]], 3.0, fwd.y, 0.0, &tol, no_observe).unwrap();
        assert!((bwd.y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let tol = Tolerances::default();
        let tau = 2.0 * std::f64::consts::PI;
        let out = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], tau, &tol, no_observe).unwrap();
        assert!((out.y[0] - 1.0).abs() < 1e-9);
        assert!(out.y[1].abs() < 1e-9);
    }

    #[test]
    fn observer_can_stop_blow_up() {
        let tol = Tolerances::default();
        // y' = y^2 blows up at t = 1.
        let out = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &tol, |_, y: &[f64; 1]| {
            if y[0].abs() > 1e8 {
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        assert!(out.stopped);
        assert!(out.t < 1.0 && out.t > 0.99);
    }

    #[test]
    fn step_limit_is_reported() {
        let tol = Tolerances { max_steps: 5, ..Tolerances::default() };
        let err = integrate(|t, _: &[f64; 1]| [(50.0 * t).sin()], 0.0, [0.0], 100.0, &tol, no_observe).unwrap_err();
        assert!(matches!(err.error, OdeError::StepLimit { max_steps: 5 }));
    }

    #[test]
    fn zero_length_interval_is_identity() {
        let out = integrate(|_, y: &[f64; 2]| [y[1], 1.0], 1.5, [2.0, 3.0], 1.5, &Tolerances::default(), no_observe).unwrap();
        assert_eq!(out.y, [2.0, 3.0]);
        assert_eq!(out.accepted, 0);
    }
}
