use crate::dynamics::{coupling_derivative, Amplitudes, Channel, ControlField, Detunings, StepPropagator, Trajectory};
use crate::error::{OctError, Result};
use crate::objective::PenaltyConfig;

/// Per-node values on both channels; used for gradients and search
/// directions.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGradient {
    pub pump: Vec<f64>,
    pub stokes: Vec<f64>,
}

impl FieldGradient {
    pub fn zeros(num_nodes: usize) -> Self {
        Self {
            pump: vec![0.0; num_nodes],
            stokes: vec![0.0; num_nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.pump.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pump.is_empty()
    }

    pub fn channel(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Pump => &self.pump,
            Channel::Stokes => &self.stokes,
        }
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.pump.iter().chain(&self.stokes).copied()
    }

    pub fn dot(&self, other: &FieldGradient) -> f64 {
        self.values().zip(other.values()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + factor·other`.
    pub fn add_scaled(&self, factor: f64, other: &FieldGradient) -> FieldGradient {
        let comb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + factor * y).collect();
        FieldGradient {
            pump: comb(&self.pump, &other.pump),
            stokes: comb(&self.stokes, &other.stokes),
        }
    }

    /// `field + step·self`, keeping the field's references.
    pub fn step_field(&self, field: &ControlField, step: f64) -> Result<ControlField> {
        let shift = |a: &[f64], d: &[f64]| a.iter().zip(d).map(|(x, y)| x + step * y).collect();
        field.with_envelopes(shift(field.pump(), &self.pump), shift(field.stokes(), &self.stokes))
    }
}

/// `2·Re⟨λ|∂U/∂Ω|ψ⟩` for the pump and Stokes midpoint envelopes of one
/// step, where `λ` is the adjoint covector after the step.
pub(crate) fn step_sensitivity(prop: &StepPropagator, lambda: &Amplitudes, psi: &Amplitudes) -> (f64, f64) {
    let along = |channel| 2.0 * lambda.dotc(&prop.derivative_apply(&coupling_derivative(channel), psi)).re;
    (along(Channel::Pump), along(Channel::Stokes))
}

/// Gradient of the discretized cost with respect to every node value of
/// `Ω_P` and `Ω_S`.
///
/// In the continuum limit this is
/// `g = −2·[α(t)(Ω − Ω^r) − Im⟨b|∂H/∂Ω|ψ⟩]·Δt`, i.e. for the pump
/// `−2·[α(Ω_P − Ω_P^r) + ½·Im(b₁*a₂ + b₂*a₁)]·Δt`, and it vanishes where the
/// stationarity conditions hold. Here it is evaluated exactly for the
/// discrete scheme: the step-propagator derivative is taken in spectral form
/// and the penalty integrals carry their trapezoid weights, so it agrees with
/// finite differences of propagate → evaluate_cost to rounding.
///
/// `costate_traj` must come from `propagate_costate_backward` started at
/// `terminal_costate(ψ(T), φ)` with `penalties.beta()`.
pub fn cost_gradient(
    field: &ControlField,
    state_traj: &Trajectory,
    costate_traj: &Trajectory,
    penalties: &PenaltyConfig,
    detunings: Detunings,
) -> Result<FieldGradient> {
    let grid = *field.grid();
    if state_traj.grid() != &grid || costate_traj.grid() != &grid {
        return Err(OctError::GridMismatch {
            context: "field, state and costate trajectories",
        });
    }
    penalties.check_grid(&grid)?;
    let n = grid.num_steps();
    let half_dt = 0.5 * grid.step();
    let beta = penalties.beta();
    let states = state_traj.states();
    let costates = costate_traj.states();

    // Sensitivity of K to the midpoint envelopes of each step.
    let mut step_pump = vec![0.0; n];
    let mut step_stokes = vec![0.0; n];
    for i in 0..n {
        let (p, s) = field.midpoint(i);
        let prop = StepPropagator::new(p, s, detunings, grid.step());
        // Adjoint covector after the step; removes the half-weight source
        // term that the stored costate already folded in at node i + 1.
        let mut lambda = *costates[i + 1].amplitudes();
        lambda[1] -= beta * half_dt * states[i + 1].amplitude(2);
        (step_pump[i], step_stokes[i]) = step_sensitivity(&prop, &lambda, states[i].amplitudes());
    }

    let node_gradient = |channel: Channel, steps: &[f64]| -> Vec<f64> {
        let values = field.channel(channel);
        let reference = field.reference(channel);
        (0..=n)
            .map(|i| {
                let mut g = 0.0;
                if i > 0 {
                    g += 0.5 * steps[i - 1];
                }
                if i < n {
                    g += 0.5 * steps[i];
                }
                g - 2.0 * grid.weight(i) * penalties.alpha(i) * (values[i] - reference[i])
            })
            .collect()
    };
    Ok(FieldGradient {
        pump: node_gradient(Channel::Pump, &step_pump),
        stokes: node_gradient(Channel::Stokes, &step_stokes),
    })
}
