//! Lyapunov functions for scalar reaction–diffusion equations on the circle
//! and on intervals: the characteristic flow they are built from, the
//! functional `V(u) = ∫ L(u, u_x) dx`, a method-of-lines solver to drive
//! them, and an experiment harness.

pub mod charflow;
pub mod error;
pub mod functional;
pub mod harness;
pub mod lagrangian;
pub mod matano;
pub mod ode;
pub mod pde;
pub mod quadrature;

pub use charflow::{evolve, CharflowConfig, EvolutionResult, EvolutionStatus, NonlinearityO2};
pub use error::{Error, Result};
pub use functional::{evaluate_v, BoundaryCondition, FunctionalReport, LagrangeDensity, ScalarField};
pub use lagrangian::{LagrangianEvaluator, LagrangianForm};
pub use matano::{integrability_defect, SeparatedLagrangian};
pub use pde::{Diffusivity, GeneralNonlinearity, Scheme, SolverConfig, Stencil, TrajectoryRecord};
pub use quadrature::{QuadratureConfig, QuadratureRule};
