//! Cost functional: overlap fidelity minus field-energy and
//! intermediate-state penalties.

use crate::dynamics::{Channel, ControlField, QuantumState, TimeGrid, Trajectory};
use crate::error::{OctError, Result};

/// Smallest admissible shape value. Keeps `α(t) = α₀/s(t)` finite at the
/// interval ends, where `sin²` vanishes.
pub const SHAPE_FLOOR: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeKind {
    SineSquared,
    Flat,
    Custom,
}

/// Time profile `s(t)` of the field penalty, sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeFunction {
    kind: ShapeKind,
    samples: Vec<f64>,
}

impl ShapeFunction {
    /// `s(t) = sin²(πt/T)`, floored at [`SHAPE_FLOOR`].
    pub fn sine_squared(grid: &TimeGrid) -> Self {
        let t_final = grid.target_time();
        let samples = grid
            .nodes()
            .map(|t| (std::f64::consts::PI * t / t_final).sin().powi(2).max(SHAPE_FLOOR))
            .collect();
        Self {
            kind: ShapeKind::SineSquared,
            samples,
        }
    }

    pub fn flat(grid: &TimeGrid) -> Self {
        Self {
            kind: ShapeKind::Flat,
            samples: vec![1.0; grid.num_nodes()],
        }
    }

    /// User-sampled profile; values must lie in `(0, 1]` and are floored at
    /// [`SHAPE_FLOOR`].
    pub fn custom(grid: &TimeGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.num_nodes() {
            return Err(OctError::FieldLength {
                name: "shape",
                expected: grid.num_nodes(),
                actual: samples.len(),
            });
        }
        if let Some(index) = samples.iter().position(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(OctError::InvalidParameter {
                name: "shape",
                reason: format!("sample {index} is outside (0, 1]"),
            });
        }
        Ok(Self {
            kind: ShapeKind::Custom,
            samples: samples.into_iter().map(|s| s.max(SHAPE_FLOOR)).collect(),
        })
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Penalty weights: `α(t) = alpha0 / s(t)` on the field energy and `beta` on
/// the integrated population of |2⟩.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyConfig {
    alpha0: f64,
    beta: f64,
    shape: ShapeFunction,
}

impl PenaltyConfig {
    pub fn new(alpha0: f64, beta: f64, shape: ShapeFunction) -> Result<Self> {
        if !(alpha0.is_finite() && alpha0 > 0.0) {
            return Err(OctError::InvalidParameter {
                name: "alpha0",
                reason: format!("must be finite and positive, got {alpha0}"),
            });
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(OctError::InvalidParameter {
                name: "beta",
                reason: format!("must be finite and non-negative, got {beta}"),
            });
        }
        Ok(Self {
            alpha0,
            beta,
            shape,
        })
    }

    /// Sine-squared shape on `grid`.
    pub fn standard(alpha0: f64, beta: f64, grid: &TimeGrid) -> Result<Self> {
        Self::new(alpha0, beta, ShapeFunction::sine_squared(grid))
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn shape(&self) -> &ShapeFunction {
        &self.shape
    }

    /// `α(t_i)`.
    pub fn alpha(&self, i: usize) -> f64 {
        self.alpha0 / self.shape.samples[i]
    }

    pub(crate) fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.shape.samples.len() != grid.num_nodes() {
            return Err(OctError::GridMismatch {
                context: "penalty shape and field",
            });
        }
        Ok(())
    }
}

/// Unit-norm target wave function `φ(T)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetState(QuantumState);

impl TargetState {
    pub fn new(state: QuantumState) -> Result<Self> {
        let norm = state.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(OctError::NotNormalized {
                norm_sqr: state.norm_sqr(),
            });
        }
        Ok(Self(state))
    }

    pub fn state(&self) -> &QuantumState {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostBreakdown {
    /// `|⟨ψ(T)|φ(T)⟩|²`.
    pub fidelity: f64,
    pub field_penalty: f64,
    pub state_penalty: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(fidelity: f64, field_penalty: f64, state_penalty: f64) -> Self {
        Self {
            fidelity,
            field_penalty,
            state_penalty,
            total: fidelity - field_penalty - state_penalty,
        }
    }
}

/// Field-energy penalty `∫ α(t)·[(Ω_P − Ω_P^r)² + (Ω_S − Ω_S^r)²] dt`.
pub fn field_penalty(field: &ControlField, penalties: &PenaltyConfig) -> Result<f64> {
    let grid = field.grid();
    penalties.check_grid(grid)?;
    Ok(grid.integrate((0..grid.num_nodes()).map(|i| {
        let sq: f64 = Channel::BOTH
            .iter()
            .map(|&c| (field.channel(c)[i] - field.reference(c)[i]).powi(2))
            .sum();
        penalties.alpha(i) * sq
    })))
}

/// Evaluates the cost functional for a field and the state trajectory it
/// produces. The Schrödinger-constraint term vanishes identically and is
/// not represented.
pub fn evaluate_cost(
    field: &ControlField,
    trajectory: &Trajectory,
    target: &TargetState,
    penalties: &PenaltyConfig,
) -> Result<CostBreakdown> {
    if field.grid() != trajectory.grid() {
        return Err(OctError::GridMismatch {
            context: "field and trajectory",
        });
    }
    let fidelity = target
        .state()
        .inner(trajectory.final_state())
        .norm_sqr()
        .min(1.0);
    let field_term = field_penalty(field, penalties)?;
    let state_term = penalties.beta * intermediate_population_metrics(trajectory).integral_rho22;
    Ok(CostBreakdown::new(fidelity, field_term, state_term))
}

/// Terminal condition for the costate, `⟨φ|ψ(T)⟩·|φ⟩`.
pub fn terminal_costate(final_state: &QuantumState, target: &TargetState) -> QuantumState {
    let phi = target.state();
    phi.scaled(phi.inner(final_state))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopulationMetrics {
    pub max_rho22: f64,
    pub integral_rho22: f64,
}

pub fn intermediate_population_metrics(trajectory: &Trajectory) -> PopulationMetrics {
    let rho22 = || trajectory.states().iter().map(|s| s.amplitude(2).norm_sqr());
    PopulationMetrics {
        max_rho22: rho22().fold(0.0, f64::max),
        integral_rho22: trajectory.grid().integrate(rho22()),
    }
}

/// `|a₃*·a₁|` for one state.
pub fn raman_coherence(state: &QuantumState) -> f64 {
    (state.amplitude(3).conj() * state.amplitude(1)).norm()
}

/// Per-node Raman coherence `|ρ₃₁(t)|`.
pub fn coherence(trajectory: &Trajectory) -> Vec<f64> {
    trajectory.states().iter().map(raman_coherence).collect()
}
