//! Propagation sweeps in which the field is recomputed at every time step
//! from the current wave function and a stored partner trajectory.
//!
//! The update rule is the stationarity condition of the discretized cost:
//! node `i` takes `Ω_i = Ω_i^r + (S_{i−1} + S_i)/(4·w_i·α_i)`, where
//! `S_j = 2·Re⟨λ_{j+1}|∂U_j/∂Ω|ψ_j⟩` is the sensitivity of the fidelity and
//! state-penalty terms to the midpoint envelope of step `j` and `w_i` the
//! trapezoid weight. In the continuum limit this is the familiar
//! `Ω_P = Ω_P^r − Im(b₁*a₂ + b₂*a₁)/(2α)` (and the Stokes analogue), but
//! written this way a field is a fixed point of the sweep exactly when the
//! gradient of the discrete cost vanishes.
//!
//! The rule is implicit in the node being set; a few predictor passes seeded
//! from the increments of the previous field resolve it, and the stored node
//! value is exactly the one used for propagation, so the returned trajectory
//! is the true trajectory of the returned field.
//!
//! The rule can be under-relaxed, `Ω ← Ω_old + μ·(rule − Ω_old)`, which
//! keeps its fixed points; for small `μ` the change is a positively scaled
//! gradient step. [`relaxed_step`] shrinks `μ` until the cost does not
//! decrease.

use crate::dynamics::{Amplitudes, Detunings, QuantumState, StepPropagator, TimeGrid, Trajectory};
use crate::objective::PenaltyConfig;
use crate::error::Result;

use super::gradient::step_sensitivity;
use super::Evaluated;

/// Predictor passes used to resolve the implicit node value.
const PASSES: usize = 2;

#[derive(Clone, Copy)]
struct Envelopes {
    pump: f64,
    stokes: f64,
}

impl Envelopes {
    fn shifted(self, from: Envelopes, to: Envelopes) -> Envelopes {
        Envelopes {
            pump: self.pump + (to.pump - from.pump),
            stokes: self.stokes + (to.stokes - from.stokes),
        }
    }
}

fn step(a: Envelopes, b: Envelopes, detunings: Detunings, dt: f64) -> StepPropagator {
    StepPropagator::new(0.5 * (a.pump + b.pump), 0.5 * (a.stokes + b.stokes), detunings, dt)
}

/// Reference envelopes plus penalty weights used by the update rule.
pub(crate) struct FeedbackRule<'a> {
    pub pump_ref: &'a [f64],
    pub stokes_ref: &'a [f64],
    pub penalties: &'a PenaltyConfig,
    /// Field of the previous iterate: seeds the predictor and anchors the
    /// relaxation.
    pub pump_old: &'a [f64],
    pub stokes_old: &'a [f64],
    /// `μ ∈ (0, 1]`; 1 is the plain rule.
    pub relaxation: f64,
}

impl FeedbackRule<'_> {
    fn old(&self, i: usize) -> Envelopes {
        Envelopes {
            pump: self.pump_old[i],
            stokes: self.stokes_old[i],
        }
    }

    /// Node value from the sensitivities of the steps before and after
    /// node `i` (absent at the ends of the grid).
    fn node_value(&self, grid: &TimeGrid, i: usize, before: Option<(f64, f64)>, after: Option<(f64, f64)>) -> Envelopes {
        let (mut sp, mut ss) = (0.0, 0.0);
        for (p, s) in before.into_iter().chain(after) {
            sp += p;
            ss += s;
        }
        let gain = 0.25 / (grid.weight(i) * self.penalties.alpha(i));
        let pump = self.pump_ref[i] + gain * sp;
        let stokes = self.stokes_ref[i] + gain * ss;
        let (mu, old) = (self.relaxation, self.old(i));
        Envelopes {
            pump: old.pump + mu * (pump - old.pump),
            stokes: old.stokes + mu * (stokes - old.stokes),
        }
    }
}

/// Adjoint covector after node `j`: the stored costate minus the
/// half-weight state-penalty source folded in at that node.
fn covector(costate: &Trajectory, source: &Trajectory, j: usize, beta_half_dt: f64) -> Amplitudes {
    let mut lambda = *costate.states()[j].amplitudes();
    lambda[1] -= beta_half_dt * source.states()[j].amplitude(2);
    lambda
}

/// Forward sweep: `ψ` starts at `initial`; the field at each node is
/// computed from the stored `costate` and the evolving `ψ`. `source` is the
/// state trajectory whose intermediate amplitude entered the costate.
///
/// Returns the new pump and Stokes envelopes and the state trajectory.
pub(crate) fn forward_sweep(
    initial: &QuantumState,
    costate: &Trajectory,
    source: &Trajectory,
    rule: &FeedbackRule<'_>,
    detunings: Detunings,
) -> (Vec<f64>, Vec<f64>, Trajectory) {
    let grid = *costate.grid();
    let dt = grid.step();
    let n = grid.num_steps();
    let bh = rule.penalties.beta() * 0.5 * dt;
    let mut pump = Vec::with_capacity(n + 1);
    let mut stokes = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);

    let mut psi = *initial.amplitudes();
    let mut prev: Option<Envelopes> = None;
    for i in 0..=n {
        let mut here = match prev {
            Some(p) => p.shifted(rule.old(i - 1), rule.old(i)),
            None => rule.old(0),
        };
        let reach = |here: Envelopes| match prev {
            Some(p) => step(p, here, detunings, dt).apply(&psi),
            None => psi,
        };
        for _ in 0..PASSES {
            let before = prev.map(|p| {
                step_sensitivity(&step(p, here, detunings, dt), &covector(costate, source, i, bh), &psi)
            });
            let after = (i < n).then(|| {
                let prop = step(here, rule.old(i + 1), detunings, dt);
                step_sensitivity(&prop, &covector(costate, source, i + 1, bh), &reach(here))
            });
            here = rule.node_value(&grid, i, before, after);
        }
        psi = reach(here);
        pump.push(here.pump);
        stokes.push(here.stokes);
        states.push(QuantumState::from(psi));
        prev = Some(here);
    }
    (pump, stokes, Trajectory::from_states(grid, states))
}

/// Backward costate sweep from `terminal` with the field recomputed at each
/// node from the evolving costate and the stored `state` trajectory. The
/// intermediate-state source uses the stored trajectory.
pub(crate) fn backward_sweep(
    terminal: &QuantumState,
    state: &Trajectory,
    rule: &FeedbackRule<'_>,
    detunings: Detunings,
) -> Trajectory {
    let grid = *state.grid();
    let dt = grid.step();
    let n = grid.num_steps();
    let psi = state.states();
    let source = |i: usize| rule.penalties.beta() * 0.5 * dt * psi[i].amplitude(2);

    let mut out = vec![QuantumState::zero(); n + 1];
    // Envelopes at node i + 1 and the covector after it.
    let mut next: Option<(Envelopes, Amplitudes)> = None;
    for i in (0..=n).rev() {
        let mut here = match next {
            Some((e, _)) => e.shifted(rule.old(i + 1), rule.old(i)),
            None => rule.old(n),
        };
        let reach = |here: Envelopes| match next {
            Some((e, lambda)) => {
                let mut b = step(here, e, detunings, dt).apply_adjoint(&lambda);
                b[1] -= source(i);
                b
            }
            None => *terminal.amplitudes(),
        };
        for _ in 0..PASSES {
            let after = next.map(|(e, lambda)| {
                step_sensitivity(&step(here, e, detunings, dt), &lambda, psi[i].amplitudes())
            });
            let before = (i > 0).then(|| {
                let mut lambda = reach(here);
                lambda[1] -= source(i);
                step_sensitivity(&step(rule.old(i - 1), here, detunings, dt), &lambda, psi[i - 1].amplitudes())
            });
            here = rule.node_value(&grid, i, before, after);
        }
        let b = reach(here);
        out[i] = QuantumState::from(b);
        let mut lambda = b;
        lambda[1] -= source(i);
        next = Some((here, lambda));
    }
    Trajectory::from_states(grid, out)
}

/// Smallest relaxation tried before the update is declared stalled.
const MIN_RELAXATION: f64 = 1e-6;

/// Relaxation factor carried across iterations: it starts at 1, is halved
/// while a trial lowers the cost, and doubles back (up to 1) after each
/// accepted step.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Relaxation(f64);

impl Default for Relaxation {
    fn default() -> Self {
        Relaxation(1.0)
    }
}

/// Runs `trial(μ)` with decreasing `μ` until the cost is at least that of
/// `current`. Returns `None` when `μ` falls below its floor.
pub(crate) fn relaxed_step<F>(current: &Evaluated, relaxation: &mut Relaxation, mut trial: F) -> Result<Option<Evaluated>>
where
    F: FnMut(f64) -> Result<Evaluated>,
{
    let mut mu = relaxation.0;
    while mu >= MIN_RELAXATION {
        let next = trial(mu)?;
        if next.cost.total >= current.cost.total {
            relaxation.0 = (2.0 * mu).min(1.0);
            return Ok(Some(next));
        }
        mu *= 0.5;
    }
    Ok(None)
}
