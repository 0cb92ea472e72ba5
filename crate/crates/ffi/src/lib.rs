//! C ABI for `o2lyap`.
//!
//! Objects are opaque handles created by `*_new` functions and released by
//! the matching `*_free`. Every fallible call returns an [`O2Status`]; on a
//! nonzero status, [`o2_last_error_message`] describes the failure on the
//! calling thread. Panics never cross the boundary.
//!
//! Lagrangian handles memoize characteristic solves and must not be used
//! from two threads at once. Nonlinearity handles are immutable and may be
//! shared, provided any user callbacks are thread safe.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use o2lyap::charflow::{evolve, CharflowConfig, EvolutionStatus, NonlinearityO2};
use o2lyap::functional::{evaluate_v, BoundaryCondition, ScalarField};
use o2lyap::harness::config::ScenarioConfig;
use o2lyap::harness::output::write_outputs;
use o2lyap::harness::run_scenario;
use o2lyap::lagrangian::{LagrangianEvaluator, LagrangianForm};
use o2lyap::quadrature::QuadratureConfig;
use o2lyap::Error;

/// Result codes; success is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum O2Status {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    IntegrationFailed = 4,
    CharacteristicEscape = 5,
    NoPeriodicOrbit = 6,
    BlowUp = 7,
    Io = 8,
    Parse = 9,
    Panic = 10,
}

impl From<&Error> for O2Status {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidConfig(_) => O2Status::InvalidArgument,
            Error::Domain(_) | Error::NonFinite { .. } => O2Status::Domain,
            Error::Integration { .. } => O2Status::IntegrationFailed,
            Error::CharacteristicEscape { .. } => O2Status::CharacteristicEscape,
            Error::AtGridPoint { source, .. } => O2Status::from(source.as_ref()),
            Error::NoPeriodicOrbit { .. } => O2Status::NoPeriodicOrbit,
            Error::BlowUp { .. } => O2Status::BlowUp,
            Error::Io(_) => O2Status::Io,
            Error::Parse(_) => O2Status::Parse,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: O2Status, msg: impl Into<String>) -> O2Status {
    set_error(msg);
    status
}

fn from_error(e: Error) -> O2Status {
    let status = O2Status::from(&e);
    fail(status, e.to_string())
}

/// Run `body`, converting panics into `O2Status::Panic`.
fn guard(body: impl FnOnce() -> O2Status) -> O2Status {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(O2Status::Panic, format!("internal panic: {msg}"))
        }
    }
}

/// Message for the last failed call on this thread (empty before any
/// failure). Successful calls leave it unchanged, except that a scenario run
/// ending in blow-up or construction failure records its reason. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn o2_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn o2_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque reflection-symmetric nonlinearity `f̄(u, q)`.
pub struct O2Nonlinearity(NonlinearityO2);

/// Built-in nonlinearities; see [`o2_nonlinearity_new`] for parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum O2NonlinearityKind {
    /// `λ u (1 - u²)`; `a = λ`.
    ChafeeInfante = 0,
    /// `λ u (1 - u²) + c q u`; `a = λ`, `b = c`.
    ChafeeInfanteCoupled = 1,
    /// `a u + b q`.
    GradientQuadratic = 2,
    /// `b q`.
    LinearInQ = 3,
    /// `-u + β tanh q`; `a = β`.
    Saturating = 4,
    Zero = 5,
}

/// User-supplied `f̄(u, q)` or `f̄_q(u, q)`.
pub type O2ScalarCallback = Option<extern "C" fn(u: f64, q: f64, user_data: *mut c_void) -> f64>;

struct Callback {
    f: extern "C" fn(f64, f64, *mut c_void) -> f64,
    user_data: *mut c_void,
}

// The caller promises the callbacks and their data are thread safe.
unsafe impl Send for Callback {}
unsafe impl Sync for Callback {}

impl Callback {
    fn call(&self, u: f64, q: f64) -> f64 {
        (self.f)(u, q, self.user_data)
    }
}

fn store<T>(out: *mut *mut T, value: T) -> O2Status {
    if out.is_null() {
        return fail(O2Status::NullPointer, "output pointer is null");
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    O2Status::Ok
}

/// Create a built-in nonlinearity.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn o2_nonlinearity_new(kind: O2NonlinearityKind, a: f64, b: f64, out: *mut *mut O2Nonlinearity) -> O2Status {
    guard(|| {
        if !(a.is_finite() && b.is_finite()) {
            return fail(O2Status::InvalidArgument, "parameters must be finite");
        }
        let nl = match kind {
            O2NonlinearityKind::ChafeeInfante => NonlinearityO2::chafee_infante(a),
            O2NonlinearityKind::ChafeeInfanteCoupled => NonlinearityO2::chafee_infante_coupled(a, b),
            O2NonlinearityKind::GradientQuadratic => NonlinearityO2::gradient_quadratic(a, b),
            O2NonlinearityKind::LinearInQ => NonlinearityO2::linear_in_q(b),
            O2NonlinearityKind::Saturating => NonlinearityO2::saturating(a),
            O2NonlinearityKind::Zero => NonlinearityO2::zero(),
        };
        store(out, O2Nonlinearity(nl))
    })
}

/// Create a nonlinearity from callbacks for `f̄` and `f̄_q`. Both receive
/// `user_data` and must stay valid until the handle and every evaluator
/// built from it are freed.
///
/// # Safety
/// `out` must be valid for a pointer write; the callbacks must be safe to
/// call with `user_data` for the lifetime of the handle.
#[no_mangle]
pub unsafe extern "C" fn o2_nonlinearity_from_callbacks(
    f_bar: O2ScalarCallback,
    f_bar_q: O2ScalarCallback,
    user_data: *mut c_void,
    out: *mut *mut O2Nonlinearity,
) -> O2Status {
    guard(|| {
        let (Some(f), Some(fq)) = (f_bar, f_bar_q) else {
            return fail(O2Status::NullPointer, "callbacks must not be null");
        };
        let f = Callback { f, user_data };
        let fq = Callback { f: fq, user_data };
        let nl = NonlinearityO2::new("callback", move |u, q| f.call(u, q), move |u, q| fq.call(u, q));
        store(out, O2Nonlinearity(nl))
    })
}

/// Evaluate `f̄(u, q)` through the handle.
///
/// # Safety
/// `nl` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn o2_nonlinearity_eval(nl: *const O2Nonlinearity, u: f64, q: f64, out: *mut f64) -> O2Status {
    guard(|| {
        let (Some(nl), false) = (nl.as_ref(), out.is_null()) else {
            return fail(O2Status::NullPointer, "null argument");
        };
        *out = nl.0.f_bar(u, q);
        O2Status::Ok
    })
}

/// # Safety
/// `nl` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn o2_nonlinearity_free(nl: *mut O2Nonlinearity) {
    if !nl.is_null() {
        drop(Box::from_raw(nl));
    }
}

/// Tolerances for characteristic integration. Zero fields take defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct O2CharflowConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub escape_bound: f64,
    pub max_steps: usize,
}

impl O2CharflowConfig {
    fn resolve(cfg: *const O2CharflowConfig) -> Result<CharflowConfig, O2Status> {
        let mut out = CharflowConfig::default();
        if let Some(c) = unsafe { cfg.as_ref() } {
            if c.rel_tol != 0.0 {
                out.rel_tol = c.rel_tol;
            }
            if c.abs_tol != 0.0 {
                out.abs_tol = c.abs_tol;
            }
            if c.escape_bound != 0.0 {
                out.escape_bound = c.escape_bound;
            }
            if c.max_steps != 0 {
                out.max_steps = c.max_steps;
            }
        }
        out.validate().map_err(from_error)?;
        Ok(out)
    }
}

/// `Ψ^{u1,u0}(q0)` with its sensitivity.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct O2Evolution {
    pub value: f64,
    pub sensitivity: f64,
    /// Nonzero if `|q|` passed the escape bound; `value` is then the last
    /// state before the bound.
    pub escaped: i32,
    pub u_at_escape: f64,
}

/// Evolve `q0` from `u0` to `u1` along `dq/du = -f̄(u, q)`. `cfg` may be null.
///
/// # Safety
/// `nl` must be a live handle, `cfg` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn o2_evolve(
    nl: *const O2Nonlinearity,
    u0: f64,
    u1: f64,
    q0: f64,
    cfg: *const O2CharflowConfig,
    out: *mut O2Evolution,
) -> O2Status {
    guard(|| {
        let (Some(nl), false) = (nl.as_ref(), out.is_null()) else {
            return fail(O2Status::NullPointer, "null argument");
        };
        let cfg = match O2CharflowConfig::resolve(cfg) {
            Ok(c) => c,
            Err(s) => return s,
        };
        match evolve(&nl.0, u0, u1, q0, &cfg) {
            Ok(r) => {
                let (escaped, u_at_escape) = match r.status {
                    EvolutionStatus::Completed => (0, f64::NAN),
                    EvolutionStatus::EscapedBound { u_at_escape } => (1, u_at_escape),
                };
                *out = O2Evolution {
                    value: r.value,
                    sensitivity: r.sensitivity,
                    escaped,
                    u_at_escape,
                };
                O2Status::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Opaque evaluator of `L(u, p)` for one nonlinearity.
pub struct O2Lagrangian(LagrangianEvaluator);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum O2LagrangianForm {
    Reduced = 0,
    DoubleIntegral = 1,
}

/// Create an evaluator; the nonlinearity is copied, so `nl` may be freed
/// afterwards. `cfg` may be null.
///
/// # Safety
/// `nl` must be a live handle, `cfg` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn o2_lagrangian_new(
    nl: *const O2Nonlinearity,
    form: O2LagrangianForm,
    cfg: *const O2CharflowConfig,
    out: *mut *mut O2Lagrangian,
) -> O2Status {
    guard(|| {
        let Some(nl) = nl.as_ref() else {
            return fail(O2Status::NullPointer, "nonlinearity is null");
        };
        let cfg = match O2CharflowConfig::resolve(cfg) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let form = match form {
            O2LagrangianForm::Reduced => LagrangianForm::Reduced,
            O2LagrangianForm::DoubleIntegral => LagrangianForm::DoubleIntegral,
        };
        match LagrangianEvaluator::new(nl.0.clone(), cfg, QuadratureConfig::default(), form) {
            Ok(e) => store(out, O2Lagrangian(e)),
            Err(e) => from_error(e),
        }
    })
}

/// `L(u, p)`.
///
/// # Safety
/// `l` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn o2_lagrangian_value(l: *const O2Lagrangian, u: f64, p: f64, out: *mut f64) -> O2Status {
    guard(|| {
        let (Some(l), false) = (l.as_ref(), out.is_null()) else {
            return fail(O2Status::NullPointer, "null argument");
        };
        match l.0.value(u, p) {
            Ok(v) => {
                *out = v;
                O2Status::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// `L_pp(u, p)`.
///
/// # Safety
/// `l` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn o2_lagrangian_convexity(l: *const O2Lagrangian, u: f64, p: f64, out: *mut f64) -> O2Status {
    guard(|| {
        let (Some(l), false) = (l.as_ref(), out.is_null()) else {
            return fail(O2Status::NullPointer, "null argument");
        };
        match l.0.convexity(u, p) {
            Ok(v) => {
                *out = v;
                O2Status::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `l` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn o2_lagrangian_free(l: *mut O2Lagrangian) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum O2BoundaryCondition {
    Periodic = 0,
    Dirichlet = 1,
    Neumann = 2,
}

/// `V(u) = ∫ L(u, u_x) dx` for grid values of `u` on `[0, length]`.
/// `convexity_min` may be null.
///
/// # Safety
/// `values` must point to `n` readable doubles; `l` must be a live handle;
/// `v` writable; `convexity_min` null or writable.
#[no_mangle]
pub unsafe extern "C" fn o2_evaluate_v(
    l: *const O2Lagrangian,
    values: *const f64,
    n: usize,
    length: f64,
    bc: O2BoundaryCondition,
    v: *mut f64,
    convexity_min: *mut f64,
) -> O2Status {
    guard(|| {
        let (Some(l), false, false) = (l.as_ref(), values.is_null(), v.is_null()) else {
            return fail(O2Status::NullPointer, "null argument");
        };
        let bc = match bc {
            O2BoundaryCondition::Periodic => BoundaryCondition::Periodic,
            O2BoundaryCondition::Dirichlet => BoundaryCondition::Dirichlet,
            O2BoundaryCondition::Neumann => BoundaryCondition::Neumann,
        };
        let data = std::slice::from_raw_parts(values, n).to_vec();
        let report = match ScalarField::new(data, length, bc).and_then(|f| evaluate_v(&l.0, &f)) {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        *v = report.v;
        if !convexity_min.is_null() {
            *convexity_min = report.convexity_min;
        }
        O2Status::Ok
    })
}

/// Headline numbers of a scenario run. Absent quantities are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct O2RunSummary {
    /// 0 success, 2 blow-up, 3 construction failure, 1 other.
    pub exit_code: i32,
    pub saves: usize,
    pub final_time: f64,
    pub final_v: f64,
    /// 1 monotone, 0 not, -1 not monitored.
    pub v_monotone: i32,
    pub max_normalized_residual: f64,
    pub final_ut_inf: f64,
}

impl Default for O2RunSummary {
    fn default() -> Self {
        Self {
            exit_code: 1,
            saves: 0,
            final_time: f64::NAN,
            final_v: f64::NAN,
            v_monotone: -1,
            max_normalized_residual: f64::NAN,
            final_ut_inf: f64::NAN,
        }
    }
}

/// Run a scenario given as TOML text. When `output_dir` is non-null the
/// CSV and manifest files are written there. A run that ends in blow-up or
/// construction failure still returns `O2_OK` with the exit code set in
/// `out`; the status reports only failures to run at all.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string, `output_dir` null or
/// NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn o2_run_scenario_toml(config_toml: *const c_char, output_dir: *const c_char, out: *mut O2RunSummary) -> O2Status {
    guard(|| {
        if config_toml.is_null() || out.is_null() {
            return fail(O2Status::NullPointer, "null argument");
        }
        let Ok(text) = CStr::from_ptr(config_toml).to_str() else {
            return fail(O2Status::InvalidArgument, "config is not UTF-8");
        };
        let dir = if output_dir.is_null() {
            None
        } else {
            match CStr::from_ptr(output_dir).to_str() {
                Ok(d) => Some(Path::new(d)),
                Err(_) => return fail(O2Status::InvalidArgument, "output directory is not UTF-8"),
            }
        };
        let outcome = match ScenarioConfig::parse(text).and_then(|cfg| run_scenario(&cfg)) {
            Ok(o) => o,
            Err(e) => return from_error(e),
        };
        if let Some(dir) = dir {
            if let Err(e) = write_outputs(&outcome, dir) {
                return from_error(e);
            }
        }
        let s = &outcome.summary;
        *out = O2RunSummary {
            exit_code: outcome.exit_code(),
            saves: s.saves,
            final_time: outcome.record.times.last().copied().unwrap_or(f64::NAN),
            final_v: outcome.record.reports.last().map_or(f64::NAN, |r| r.v),
            v_monotone: s.v_monotone.map_or(-1, i32::from),
            max_normalized_residual: s.max_normalized_residual.unwrap_or(f64::NAN),
            final_ut_inf: s.final_ut_inf,
        };
        if let Some(f) = &outcome.failure {
            set_error(format!("{}: {}", f.kind, f.message));
        }
        O2Status::Ok
    })
}
