//! Optimal control of pump/Stokes pulse pairs in a three-level Λ system.
//!
//! The crate propagates the rotating-wave Schrödinger equation and its
//! costate ([`dynamics`]), evaluates a cost functional with field-energy and
//! intermediate-state penalties ([`objective`]), and maximizes it with three
//! schemes ([`optimizers`]): conjugate gradient, Zhu–Rabitz and Krotov.
//! [`scenarios`] packages the population-transfer and maximum-coherence
//! problems.
//!
//! ```
//! use lambda_oct_core::prelude::*;
//!
//! let scenario = Scenario::population_transfer();
//! let guess = gaussian_guess(&scenario).unwrap();
//! let psi = propagate_state_forward(&scenario.initial_state, &guess, scenario.detunings).unwrap();
//! assert!((psi.final_state().norm() - 1.0).abs() < 1e-10);
//! ```

pub mod dynamics;
pub mod error;
pub mod objective;
pub mod optimizers;
pub mod scenarios;

pub use error::{OctError, Result};

pub mod prelude {
    pub use crate::dynamics::{
        dark_state, propagate_costate_backward, propagate_state_forward, rwa_hamiltonian, Channel,
        Complex64, ControlField, Detunings, QuantumState, TimeGrid, Trajectory,
    };
    pub use crate::error::{OctError, Result};
    pub use crate::objective::{
        coherence, evaluate_cost, intermediate_population_metrics, raman_coherence, terminal_costate,
        CostBreakdown, PenaltyConfig, PopulationMetrics, ShapeFunction, TargetState,
    };
    pub use crate::optimizers::{
        cost_gradient, line_search, optimize, prp_direction, run_conjugate_gradient, run_krotov,
        run_zhu_rabitz, ControlProblem, FieldGradient, IterationRecord, LineSearchConfig, Method,
        OptimizationResult, OptimizationSummary, OptimizerConfig, ReferenceMode, StopReason,
    };
    pub use crate::scenarios::{
        classify_field, classify_mechanism, gaussian_guess, GaussianGuess, Mechanism, Ordering, Scenario,
        ScenarioKind,
    };
}
