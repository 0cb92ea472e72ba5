//! Scenario configuration, stored as TOML.
//!
//! ```toml
//! scenario = "ChafeeInfante"
//!
//! [params]
//! lambda = 15.0
//!
//! [solver]
//! n = 256
//! t_end = 10.0
//! save_every = 2000
//! scheme = "IMEXDiffusion"
//!
//! [initial]
//! kind = "RandomSmooth"
//! seed = 7
//! modes = 8
//! amplitude = 0.5
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::charflow::CharflowConfig;
use crate::error::{Error, Result};
use crate::functional::BoundaryCondition;
use crate::lagrangian::LagrangianForm;
use crate::pde::{Scheme, SolverConfig, Stencil};
use crate::quadrature::QuadratureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// `u_t = u_xx + λu(1-u²)` on an interval with Neumann ends.
    Classical,
    /// Same nonlinearity on the circle.
    ChafeeInfante,
    /// Relaxation to a nonconstant equilibrium on the circle.
    FrozenWave,
    /// `u_t = u_xx + λu(1-u²) - c u_x`.
    RotatingWave,
    /// `u_t = ā u_xx + λu(1-u²)` with constant `ā`.
    QLinear,
    /// `f = a·u + b·u_x²/2`.
    GradientQuadratic,
    /// Embedded planar centre.
    PlanarEmbedding,
    /// `f = λu(1-u²) + ε u_x` with Dirichlet ends.
    MatanoSeparated,
}

pub const ALL_SCENARIOS: [ScenarioKind; 8] = [
    ScenarioKind::Classical,
    ScenarioKind::ChafeeInfante,
    ScenarioKind::FrozenWave,
    ScenarioKind::RotatingWave,
    ScenarioKind::QLinear,
    ScenarioKind::GradientQuadratic,
    ScenarioKind::PlanarEmbedding,
    ScenarioKind::MatanoSeparated,
];

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Classical => "Classical",
            ScenarioKind::ChafeeInfante => "ChafeeInfante",
            ScenarioKind::FrozenWave => "FrozenWave",
            ScenarioKind::RotatingWave => "RotatingWave",
            ScenarioKind::QLinear => "QLinear",
            ScenarioKind::GradientQuadratic => "GradientQuadratic",
            ScenarioKind::PlanarEmbedding => "PlanarEmbedding",
            ScenarioKind::MatanoSeparated => "MatanoSeparated",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioKind::Classical => "λu(1-u²) with Neumann ends; L reduces to p²/2 - F(u)",
            ScenarioKind::ChafeeInfante => "λu(1-u²) on the circle; V monotone, convergence to equilibria",
            ScenarioKind::FrozenWave => "relaxation to a nonconstant equilibrium on the circle (ℓ = 2π)",
            ScenarioKind::RotatingWave => "λu(1-u²) - c u_x; equilibrium profile travels at speed c",
            ScenarioKind::QLinear => "constant diffusion ā with λu(1-u²); weighted decay identity",
            ScenarioKind::GradientQuadratic => "a·u + b u_x²/2; closed-form Lagrangian",
            ScenarioKind::PlanarEmbedding => "embedded planar centre; periodic orbit, no Lyapunov function",
            ScenarioKind::MatanoSeparated => "λu(1-u²) + ε u_x with Dirichlet ends; separated construction",
        }
    }

    pub fn boundary_condition(self) -> BoundaryCondition {
        match self {
            ScenarioKind::Classical => BoundaryCondition::Neumann,
            ScenarioKind::MatanoSeparated => BoundaryCondition::Dirichlet,
            _ => BoundaryCondition::Periodic,
        }
    }

    pub fn default_length(self) -> f64 {
        match self {
            ScenarioKind::FrozenWave | ScenarioKind::RotatingWave | ScenarioKind::PlanarEmbedding => 2.0 * PI,
            _ => 1.0,
        }
    }

    /// Whether the scenario carries a Lyapunov functional.
    pub fn has_lyapunov(self) -> bool {
        !matches!(self, ScenarioKind::RotatingWave | ScenarioKind::PlanarEmbedding)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_SCENARIOS
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown scenario '{s}'")))
    }
}

/// Nonlinearity parameters. Each scenario reads the ones it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub lambda: f64,
    /// Advection speed.
    pub c: f64,
    pub epsilon: f64,
    /// Coefficient of `u_x²/2`.
    pub b: f64,
    /// Coefficient of `u` in the gradient-quadratic scenario.
    pub a: f64,
    /// Constant diffusion for the quasilinear scenario.
    pub diffusivity: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lambda: 15.0,
            c: 1.0,
            epsilon: 0.5,
            b: 1.0,
            a: -1.0,
            diffusivity: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub mode: usize,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum InitialCondition {
    /// `constant + Σ cos_k cos(kx·2π/ℓ) + sin_k sin(kx·2π/ℓ)`. On the
    /// interval the modes are those of the boundary condition.
    FourierMix {
        #[serde(default)]
        constant: f64,
        terms: Vec<FourierTerm>,
        /// Impose `u(x + ℓ/2) = -u(x)` exactly on the grid.
        #[serde(default)]
        half_shift_antisymmetric: bool,
    },
    /// Truncated random Fourier series with coefficients decaying like
    /// `k^-decay`.
    RandomSmooth {
        seed: u64,
        #[serde(default = "default_random_modes")]
        modes: usize,
        #[serde(default = "default_random_amplitude")]
        amplitude: f64,
        #[serde(default = "default_decay")]
        decay: f64,
    },
    /// Last snapshot of a previous run, read from its `snapshots.csv`.
    Import { path: String },
    /// Relax a FrozenWave run with the same grid and `λ` to `t_relax`, then
    /// start from its final state.
    Relaxed {
        t_relax: f64,
        #[serde(default = "default_relax_amplitude")]
        amplitude: f64,
    },
}

fn default_random_modes() -> usize {
    8
}

fn default_random_amplitude() -> f64 {
    0.5
}

fn default_decay() -> f64 {
    2.0
}

fn default_relax_amplitude() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Defaults to the scenario's natural length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_length: Option<f64>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub form: LagrangianForm,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub charflow: CharflowConfig,
    pub initial: InitialCondition,
    /// Output directory, relative to the output root unless absolute.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

impl ScenarioConfig {
    /// A runnable configuration with the settings used by the built-in checks.
    pub fn preset(kind: ScenarioKind) -> Self {
        let mut solver = SolverConfig::default();
        let params = Params::default();
        let initial = match kind {
            ScenarioKind::Classical | ScenarioKind::ChafeeInfante | ScenarioKind::QLinear => {
                solver.t_end = 10.0;
                solver.dt = Some(5e-4);
                solver.scheme = Scheme::IMEXDiffusion;
                solver.save_every = 200;
                InitialCondition::RandomSmooth {
                    seed: 7,
                    modes: 8,
                    amplitude: 0.5,
                    decay: 2.0,
                }
            }
            ScenarioKind::FrozenWave => {
                solver.t_end = 10.0;
                solver.save_every = 4000;
                InitialCondition::FourierMix {
                    constant: 0.0,
                    terms: vec![FourierTerm { mode: 1, cos: 0.9, sin: 0.0 }],
                    half_shift_antisymmetric: true,
                }
            }
            ScenarioKind::RotatingWave => {
                solver.t_end = 2.0;
                solver.save_every = 1000;
                InitialCondition::Relaxed {
                    t_relax: 10.0,
                    amplitude: 0.9,
                }
            }
            ScenarioKind::GradientQuadratic => {
                solver.t_end = 0.0125;
                solver.save_every = 32;
                InitialCondition::FourierMix {
                    constant: 0.1,
                    terms: vec![
                        FourierTerm { mode: 1, cos: 0.5, sin: 0.0 },
                        FourierTerm { mode: 2, cos: 0.0, sin: 0.25 },
                    ],
                    half_shift_antisymmetric: false,
                }
            }
            ScenarioKind::PlanarEmbedding => {
                solver.n = 64;
                solver.stencil = Stencil::Fourier;
                solver.dt = Some(1e-3);
                solver.t_end = 8.0;
                solver.save_every = 100;
                InitialCondition::FourierMix {
                    constant: 0.0,
                    terms: vec![FourierTerm { mode: 1, cos: 0.2, sin: 1.1 }],
                    half_shift_antisymmetric: false,
                }
            }
            ScenarioKind::MatanoSeparated => {
                solver.t_end = 0.05;
                solver.save_every = 32;
                InitialCondition::FourierMix {
                    constant: 0.0,
                    terms: vec![
                        // 0.2 sin³(πx): u_x and u_xx vanish at both ends
                        FourierTerm { mode: 1, cos: 0.0, sin: 0.15 },
                        FourierTerm { mode: 3, cos: 0.0, sin: -0.05 },
                    ],
                    half_shift_antisymmetric: false,
                }
            }
        };
        let params = match kind {
            ScenarioKind::MatanoSeparated => Params { lambda: 5.0, ..params },
            _ => params,
        };
        // Gradients stay small in these runs, so few panels suffice.
        let quadrature = match kind {
            ScenarioKind::GradientQuadratic => QuadratureConfig { panels: 4, nested_panels: 4, ..Default::default() },
            ScenarioKind::MatanoSeparated => QuadratureConfig { panels: 2, nested_panels: 2, ..Default::default() },
            _ => QuadratureConfig::default(),
        };
        Self {
            scenario: kind,
            domain_length: None,
            params,
            form: LagrangianForm::Reduced,
            solver,
            quadrature,
            charflow: CharflowConfig::default(),
            initial,
            output_path: None,
        }
    }

    pub fn length(&self) -> f64 {
        self.domain_length.unwrap_or_else(|| self.scenario.default_length())
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.scenario.boundary_condition()
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.quadrature.validate()?;
        self.charflow.validate()?;
        let ell = self.length();
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::InvalidConfig(format!("domain length must be positive, got {ell}")));
        }
        let p = &self.params;
        let all_finite = [p.lambda, p.c, p.epsilon, p.b, p.a, p.diffusivity].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidConfig("parameters must be finite".into()));
        }
        match self.scenario {
            ScenarioKind::Classical | ScenarioKind::ChafeeInfante | ScenarioKind::FrozenWave | ScenarioKind::MatanoSeparated
                if p.lambda <= 0.0 =>
            {
                return Err(Error::InvalidConfig(format!("λ must be positive, got {}", p.lambda)))
            }
            ScenarioKind::RotatingWave if p.c == 0.0 => {
                return Err(Error::InvalidConfig("rotating waves need c ≠ 0".into()))
            }
            ScenarioKind::QLinear if p.diffusivity <= 0.0 => {
                return Err(Error::InvalidConfig(format!("ā must be positive, got {}", p.diffusivity)))
            }
            ScenarioKind::PlanarEmbedding if (ell - 2.0 * PI).abs() > 1e-12 => {
                return Err(Error::InvalidConfig("the planar embedding lives on ℓ = 2π".into()))
            }
            _ => {}
        }
        if self.solver.stencil == Stencil::Fourier && (self.bc() != BoundaryCondition::Periodic || self.solver.n % 2 != 0) {
            return Err(Error::InvalidConfig("Fourier stencil needs a periodic grid with even n".into()));
        }
        if let InitialCondition::RandomSmooth { modes, amplitude, decay, .. } = &self.initial {
            if *modes == 0 || !amplitude.is_finite() || !decay.is_finite() {
                return Err(Error::InvalidConfig("random-smooth data needs modes >= 1 and finite amplitude".into()));
            }
        }
        if let InitialCondition::FourierMix {
            half_shift_antisymmetric: true,
            constant,
            terms,
        } = &self.initial
        {
            if self.bc() != BoundaryCondition::Periodic || self.solver.n % 2 != 0 {
                return Err(Error::InvalidConfig("half-shift antisymmetry needs a periodic grid with even n".into()));
            }
            if *constant != 0.0 || terms.iter().any(|t| t.mode % 2 == 0) {
                return Err(Error::InvalidConfig("half-shift antisymmetric data has only odd modes".into()));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn emit(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Set a parameter by name, for sweeps.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!("{name} needs a whole number, got {v}")))
            }
        };
        match name {
            "lambda" => self.params.lambda = value,
            "c" => self.params.c = value,
            "epsilon" => self.params.epsilon = value,
            "b" => self.params.b = value,
            "a" => self.params.a = value,
            "diffusivity" => self.params.diffusivity = value,
            "domain_length" => self.domain_length = Some(value),
            "n" => self.solver.n = as_count(value)?,
            "dt" => self.solver.dt = Some(value),
            "t_end" => self.solver.t_end = value,
            "save_every" => self.solver.save_every = as_count(value)?,
            "seed" => match &mut self.initial {
                InitialCondition::RandomSmooth { seed, .. } => *seed = as_count(value)? as u64,
                _ => return Err(Error::InvalidConfig("seed applies to random-smooth data only".into())),
            },
            _ => return Err(Error::InvalidConfig(format!("unknown sweep parameter '{name}'"))),
        }
        Ok(())
    }
}

/// Parameter names accepted by [`ScenarioConfig::set_param`].
pub const SWEEP_PARAMS: [&str; 12] = [
    "lambda",
    "c",
    "epsilon",
    "b",
    "a",
    "diffusivity",
    "domain_length",
    "n",
    "dt",
    "t_end",
    "save_every",
    "seed",
];
