//! Scenario registry and runner: builds the PDE and the matching Lyapunov
//! construction from a [`ScenarioConfig`], integrates, attaches reports at
//! every save point and summarizes the checks each scenario supports.

pub mod checks;
pub mod config;
pub mod fourier;
pub mod initial;
pub mod output;
pub mod planar;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{FourierTerm, InitialCondition, Params, ScenarioConfig, ScenarioKind, ALL_SCENARIOS};
pub use fourier::{best_shift, fourier_project, off_span_residual, ShiftMatch};
pub use planar::{embed_planar, PlanarField};

use crate::charflow::NonlinearityO2;
use crate::error::{Error, Result};
use crate::functional::{decay_identity_residuals, dissipation_rate, evaluate_v, FunctionalReport, LagrangeDensity, ScalarField};
use crate::lagrangian::{effective_nonlinearity, LagrangianEvaluator};
use crate::matano::SeparatedLagrangian;
use crate::ode::Tolerances;
use crate::pde::{self, Diffusivity, GeneralNonlinearity, RunStatus, Scheme, SolverConfig, TrajectoryRecord};

/// Version of the CSV and JSON layouts.
pub const FORMAT_VERSION: u32 = 1;

/// Relative slack allowed on `V(t_{k+1}) <= V(t_k)`.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;

/// Which Lyapunov construction monitors a run. Holds no caches, so it can
/// be shared between threads; evaluators are built per worker.
#[derive(Debug, Clone)]
pub enum MonitorSpec {
    /// `V = ∫ L(u, u_x)`, with optional `1/ā` weight in the dissipation.
    O2 { nl: NonlinearityO2, weight: Option<NonlinearityO2> },
    /// Separated-boundary construction for `f(x, u, u_x)`.
    Separated { nl: GeneralNonlinearity },
    /// No Lyapunov function is available.
    None,
}

/// PDE plus monitor for a configuration.
#[derive(Debug, Clone)]
pub struct Construction {
    pub nonlinearity: GeneralNonlinearity,
    pub diffusivity: Option<Diffusivity>,
    pub monitor: MonitorSpec,
}

fn chafee_infante_pde(lambda: f64) -> (NonlinearityO2, GeneralNonlinearity) {
    let o2 = NonlinearityO2::chafee_infante(lambda);
    let g = GeneralNonlinearity::from_o2(&o2);
    (o2, g)
}

pub fn build_construction(cfg: &ScenarioConfig) -> Result<Construction> {
    let p = cfg.params;
    let out = match cfg.scenario {
        ScenarioKind::Classical | ScenarioKind::ChafeeInfante | ScenarioKind::FrozenWave => {
            let (o2, g) = chafee_infante_pde(p.lambda);
            Construction {
                nonlinearity: g,
                diffusivity: None,
                monitor: MonitorSpec::O2 { nl: o2, weight: None },
            }
        }
        ScenarioKind::RotatingWave => Construction {
            nonlinearity: GeneralNonlinearity::advected(&NonlinearityO2::chafee_infante(p.lambda), p.c),
            diffusivity: None,
            monitor: MonitorSpec::None,
        },
        ScenarioKind::QLinear => {
            let (o2, g) = chafee_infante_pde(p.lambda);
            let a = p.diffusivity;
            let a_bar = NonlinearityO2::new(format!("const({a})"), move |_, _| a, |_, _| 0.0);
            Construction {
                nonlinearity: g,
                diffusivity: Some(Diffusivity::Constant(a)),
                monitor: MonitorSpec::O2 {
                    nl: effective_nonlinearity(&o2, &a_bar)?,
                    weight: Some(a_bar),
                },
            }
        }
        ScenarioKind::GradientQuadratic => {
            let o2 = NonlinearityO2::gradient_quadratic(p.a, p.b);
            Construction {
                nonlinearity: GeneralNonlinearity::from_o2(&o2),
                diffusivity: None,
                monitor: MonitorSpec::O2 { nl: o2, weight: None },
            }
        }
        ScenarioKind::PlanarEmbedding => Construction {
            nonlinearity: embed_planar(&PlanarField::center())?,
            diffusivity: None,
            monitor: MonitorSpec::None,
        },
        ScenarioKind::MatanoSeparated => {
            let (lambda, eps) = (p.lambda, p.epsilon);
            let g = GeneralNonlinearity::new(
                format!("chafee-infante({lambda})+{eps}p"),
                move |_, u, p| lambda * u * (1.0 - u * u) + eps * p,
                move |_, _, _| eps,
                true,
            );
            Construction {
                nonlinearity: g.clone(),
                diffusivity: None,
                monitor: MonitorSpec::Separated { nl: g },
            }
        }
    };
    Ok(out)
}

enum Monitor {
    O2(LagrangianEvaluator, Option<NonlinearityO2>),
    Separated(SeparatedLagrangian),
}

impl Monitor {
    fn report(&self, field: &ScalarField, u_t: &ScalarField) -> Result<FunctionalReport> {
        let (density, weight): (&dyn LagrangeDensity, Option<&NonlinearityO2>) = match self {
            Monitor::O2(e, w) => (e, w.as_ref()),
            Monitor::Separated(s) => (s, None),
        };
        let mut r = evaluate_v(density, field)?;
        r.dissipation = -dissipation_rate(density, field, u_t, weight)?;
        Ok(r)
    }
}

impl MonitorSpec {
    fn instantiate(&self, cfg: &ScenarioConfig) -> Result<Option<Monitor>> {
        Ok(match self {
            MonitorSpec::O2 { nl, weight } => Some(Monitor::O2(
                LagrangianEvaluator::new(nl.clone(), cfg.charflow, cfg.quadrature, cfg.form)?,
                weight.clone(),
            )),
            MonitorSpec::Separated { nl } => Some(Monitor::Separated(SeparatedLagrangian::new(
                nl.clone(),
                cfg.charflow,
                cfg.quadrature,
            )?)),
            MonitorSpec::None => None,
        })
    }
}

/// Machine-readable failure attached to a partial run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// `blow_up`, `construction` or `other`.
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

impl ErrorRecord {
    fn from_error(e: &Error, t: Option<f64>) -> Self {
        let kind = if e.is_construction_failure() { "construction" } else { "other" };
        Self {
            kind: kind.into(),
            message: e.to_string(),
            t,
        }
    }
}

/// Per-save quantities beyond the functional report.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SaveDiagnostics {
    pub ut_inf: f64,
    /// Mode-1 Fourier coefficients (periodic runs).
    pub fourier: Option<(f64, f64)>,
    /// `‖u - P_E u‖∞` for the planar embedding.
    pub off_span: Option<f64>,
    /// Planar ODE state at the save time.
    pub planar: Option<(f64, f64)>,
    /// Best continuous shift against the initial profile.
    pub shift: Option<ShiftMatch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatingSummary {
    pub theta: f64,
    pub match_error: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarSummary {
    pub period: f64,
    /// `‖u(T) - u(0)‖∞ / ‖u(0)‖∞`.
    pub return_error: f64,
    /// Largest `|(a, b)_PDE - (a, b)_ODE|` at saves within one period.
    pub projection_error: f64,
    /// Largest off-span residual relative to `‖u‖∞`.
    pub off_span_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: ScenarioKind,
    pub completed: bool,
    pub saves: usize,
    pub dt: f64,
    pub steps: usize,
    /// Largest `(V_{k+1} - V_k) / |V_k|`; nonpositive for a decreasing series.
    pub v_worst_increase: Option<f64>,
    pub v_monotone: Option<bool>,
    /// Largest decay-identity residual over `max(1, |V̇|)`.
    pub max_normalized_residual: Option<f64>,
    pub final_ut_inf: f64,
    pub rotating: Option<RotatingSummary>,
    pub planar: Option<PlanarSummary>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub record: TrajectoryRecord,
    /// Decay-identity residuals aligned with the saves (NaN where undefined).
    pub residuals: Vec<f64>,
    pub diagnostics: Vec<SaveDiagnostics>,
    pub summary: Summary,
    pub failure: Option<ErrorRecord>,
}

impl ScenarioOutcome {
    /// Process exit code: 0 success, 2 blow-up, 3 construction failure, 1 other.
    pub fn exit_code(&self) -> i32 {
        match &self.failure {
            None => 0,
            Some(f) if f.kind == "blow_up" => 2,
            Some(f) if f.kind == "construction" => 3,
            Some(_) => 1,
        }
    }
}

/// Initial field for the configuration, running the relaxation when asked.
pub fn initial_field(cfg: &ScenarioConfig) -> Result<ScalarField> {
    let (n, ell, bc) = (cfg.solver.n, cfg.length(), cfg.bc());
    match &cfg.initial {
        InitialCondition::Relaxed { t_relax, amplitude } => {
            let mut relax = ScenarioConfig::preset(ScenarioKind::FrozenWave);
            relax.domain_length = Some(ell);
            relax.params = cfg.params;
            relax.charflow = cfg.charflow;
            relax.solver = SolverConfig {
                n,
                dt: None,
                t_end: *t_relax,
                save_every: usize::MAX,
                scheme: Scheme::RK4Explicit,
                stencil: cfg.solver.stencil,
            };
            relax.initial = InitialCondition::FourierMix {
                constant: 0.0,
                terms: vec![FourierTerm { mode: 1, cos: *amplitude, sin: 0.0 }],
                half_shift_antisymmetric: true,
            };
            relax.validate()?;
            let c = build_construction(&relax)?;
            let u0 = initial::generate(&relax.initial, n, ell, bc)?;
            let rec = pde::integrate(&c.nonlinearity, c.diffusivity.as_ref(), &u0, &relax.solver)?;
            if let RunStatus::BlowUp { t } = rec.status {
                return Err(Error::BlowUp { t });
            }
            Ok(rec.last().cloned().expect("a run always saves its final state"))
        }
        other => initial::generate(other, n, ell, bc),
    }
}

/// Reports for every save up to the first failure, and that failure.
fn attach_reports(spec: &MonitorSpec, cfg: &ScenarioConfig, record: &TrajectoryRecord) -> (Vec<FunctionalReport>, Option<(usize, Error)>) {
    if matches!(spec, MonitorSpec::None) {
        return (Vec::new(), None);
    }
    let results: Vec<Result<FunctionalReport>> = (0..record.len())
        .into_par_iter()
        .map_init(
            || spec.instantiate(cfg),
            |monitor, k| match monitor {
                Ok(Some(m)) => m.report(&record.snapshots[k], &record.u_t_snapshots[k]),
                Ok(None) => unreachable!("monitor spec is not None"),
                Err(e) => Err(Error::InvalidConfig(e.to_string())),
            },
        )
        .collect();
    let mut reports = Vec::with_capacity(results.len());
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => return (reports, Some((k, e))),
        }
    }
    (reports, None)
}

fn planar_tolerances() -> Tolerances {
    Tolerances {
        rel: 1e-12,
        abs: 1e-14,
        max_steps: 10_000_000,
    }
}

/// Integrate, monitor and summarize. Solver blow-up and construction
/// failures yield a partial outcome with [`ScenarioOutcome::failure`] set;
/// invalid configurations are errors.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let construction = build_construction(cfg)?;
    let u0 = initial_field(cfg)?;
    let mut record = pde::integrate(&construction.nonlinearity, construction.diffusivity.as_ref(), &u0, &cfg.solver)?;
    let mut failure = match record.status {
        RunStatus::BlowUp { t } => Some(ErrorRecord {
            kind: "blow_up".into(),
            message: format!("solution exceeded {:e} at t = {t}", pde::BLOW_UP_THRESHOLD),
            t: Some(t),
        }),
        RunStatus::Completed => None,
    };

    let (reports, report_failure) = attach_reports(&construction.monitor, cfg, &record);
    record.reports = reports;
    if let Some((k, e)) = report_failure {
        log::error!("Lyapunov construction failed at save {k}: {e}");
        // A blow-up explains any monitor failure on the way up.
        if failure.is_none() {
            failure = Some(ErrorRecord::from_error(&e, Some(record.times[k])));
        }
    }

    let k = record.reports.len();
    let v: Vec<f64> = record.reports.iter().map(|r| r.v).collect();
    let d: Vec<f64> = record.reports.iter().map(|r| r.dissipation).collect();
    let mut residuals = decay_identity_residuals(&record.times[..k], &v, &d);
    residuals.resize(record.len(), f64::NAN);

    let mut diagnostics: Vec<SaveDiagnostics> = record
        .u_t_snapshots
        .iter()
        .map(|ut| SaveDiagnostics {
            ut_inf: ut.max_abs(),
            ..Default::default()
        })
        .collect();
    if cfg.bc() == crate::functional::BoundaryCondition::Periodic {
        for (diag, u) in diagnostics.iter_mut().zip(&record.snapshots) {
            diag.fourier = Some(fourier_project(u, 1)?);
        }
    }

    let mut rotating = None;
    let mut planar_summary = None;
    match cfg.scenario {
        ScenarioKind::RotatingWave => {
            let reference = &record.snapshots[0];
            for (diag, u) in diagnostics.iter_mut().zip(&record.snapshots) {
                diag.shift = Some(best_shift(reference, u)?);
            }
            if let (Some(last), Some(&t)) = (diagnostics.last().and_then(|d| d.shift), record.times.last()) {
                rotating = Some(RotatingSummary {
                    theta: last.theta,
                    match_error: last.error,
                    speed: if t > 0.0 { last.theta / t } else { 0.0 },
                });
            }
        }
        ScenarioKind::PlanarEmbedding => {
            planar_summary = Some(planar_checks(cfg, &construction, &u0, &record, &mut diagnostics)?);
        }
        _ => {}
    }

    let (v_worst_increase, v_monotone) = if k >= 2 {
        let worst = v
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max);
        let ok = v.windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOLERANCE * w[0].abs());
        (Some(worst), Some(ok))
    } else {
        (None, None)
    };
    let normalized = residuals
        .iter()
        .zip(&d)
        .filter(|(r, _)| r.is_finite())
        .map(|(r, d)| r / d.abs().max(1.0))
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));

    let summary = Summary {
        scenario: cfg.scenario,
        completed: matches!(record.status, RunStatus::Completed),
        saves: record.len(),
        dt: record.dt,
        steps: record.steps,
        v_worst_increase,
        v_monotone,
        max_normalized_residual: normalized,
        final_ut_inf: diagnostics.last().map_or(f64::NAN, |d| d.ut_inf),
        rotating,
        planar: planar_summary,
    };
    Ok(ScenarioOutcome {
        config: cfg.clone(),
        record,
        residuals,
        diagnostics,
        summary,
        failure,
    })
}

/// Compare the embedded PDE run with the planar ODE it reduces to.
fn planar_checks(
    cfg: &ScenarioConfig,
    construction: &Construction,
    u0: &ScalarField,
    record: &TrajectoryRecord,
    diagnostics: &mut [SaveDiagnostics],
) -> Result<PlanarSummary> {
    let pf = PlanarField::center();
    let tol = planar_tolerances();
    let start = fourier_project(u0, 1)?;
    let period = planar::planar_period(&pf, start, 100.0 * PI, &tol)?;
    let oracle = planar::planar_samples(&pf, start, &record.times, &tol)?;
    let mut projection_error: f64 = 0.0;
    let mut off_span_ratio: f64 = 0.0;
    for (((diag, u), &t), &ab) in diagnostics.iter_mut().zip(&record.snapshots).zip(&record.times).zip(&oracle) {
        let off = off_span_residual(u, &[1])?;
        diag.off_span = Some(off);
        diag.planar = Some(ab);
        off_span_ratio = off_span_ratio.max(off / u.max_abs().max(f64::MIN_POSITIVE));
        if t <= period {
            let (a, b) = diag.fourier.expect("periodic run has Fourier data");
            projection_error = projection_error.max((a - ab.0).abs().max((b - ab.1).abs()));
        }
    }
    // Return error from a run that ends exactly at the period.
    let to_period = SolverConfig {
        t_end: period,
        save_every: usize::MAX,
        ..cfg.solver
    };
    let rec = pde::integrate(&construction.nonlinearity, construction.diffusivity.as_ref(), u0, &to_period)?;
    let end = rec.last().expect("a run always saves its final state");
    let return_error = u0
        .values()
        .iter()
        .zip(end.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / u0.max_abs();
    Ok(PlanarSummary {
        period,
        return_error,
        projection_error,
        off_span_ratio,
    })
}

/// Run one configuration per value of `param`, in parallel.
pub fn sweep(cfg: &ScenarioConfig, param: &str, values: &[f64]) -> Vec<(f64, Result<ScenarioOutcome>)> {
    values
        .par_iter()
        .map(|&v| {
            let mut c = cfg.clone();
            let r = c.set_param(param, v).and_then(|_| {
                let base = cfg.output_path.clone().unwrap_or_else(|| cfg.scenario.name().to_lowercase());
                c.output_path = Some(format!("{base}/{param}={v}"));
                run_scenario(&c)
            });
            (v, r)
        })
        .collect()
}
