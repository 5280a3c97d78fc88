use crate::dynamics::{propagate_costate_backward, ControlField};
use crate::error::Result;
use crate::objective::terminal_costate;

use super::sweep::{forward_sweep, relaxed_step, FeedbackRule, Relaxation};
use super::{finish, iterate, prepare_initial_field, ControlProblem, Evaluated, Method, OptimizationResult,
            OptimizerConfig, ReferenceMode, Update};

struct KrotovUpdate<'a> {
    problem: &'a ControlProblem,
    config: &'a OptimizerConfig,
    relaxation: Relaxation,
}

impl Update for KrotovUpdate<'_> {
    fn next(&mut self, current: &Evaluated) -> Result<Option<Evaluated>> {
        let penalties = &self.config.penalties;
        let det = self.problem.detunings;
        let field = &current.field;
        let psi = &current.trajectory;

        // Costate with the old field.
        let chi_t = terminal_costate(psi.final_state(), &self.problem.target);
        let chi = propagate_costate_backward(&chi_t, field, det, psi, penalties.beta())?;

        // Previous-iterate mode measures the update against the current
        // field; the other modes keep their fixed references.
        let (pump_ref, stokes_ref) = match self.config.reference_mode {
            ReferenceMode::PreviousIterate => (field.pump().to_vec(), field.stokes().to_vec()),
            ReferenceMode::Zero | ReferenceMode::FixedGuess => {
                (field.pump_ref().to_vec(), field.stokes_ref().to_vec())
            }
        };
        let problem = self.problem;
        relaxed_step(current, &mut self.relaxation, |mu| {
            let rule = FeedbackRule {
                pump_ref: &pump_ref,
                stokes_ref: &stokes_ref,
                penalties,
                pump_old: field.pump(),
                stokes_old: field.stokes(),
                relaxation: mu,
            };
            let (pump, stokes, trajectory) = forward_sweep(&problem.initial, &chi, psi, &rule, det);
            let next = ControlField::with_reference(*field.grid(), pump, stokes, pump_ref.clone(), stokes_ref.clone())?;
            Evaluated::from_parts(next, trajectory, problem, penalties)
        })
    }
}

/// Krotov iteration: costate with the old field, then a forward sweep that
/// updates the field at every time step from the stored costate and the new
/// wave function. With [`ReferenceMode::PreviousIterate`] the update is
/// `Ω^(k+1) = Ω^k + (1/α)·Im⟨χ^k|∂H/∂Ω|ψ^(k+1)⟩`.
pub fn run_krotov(
    initial_field: &ControlField,
    problem: &ControlProblem,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    let field = prepare_initial_field(initial_field, config)?;
    let start = Evaluated::new(field, problem, &config.penalties)?;
    let mut update = KrotovUpdate {
        problem,
        config,
        relaxation: Relaxation::default(),
    };
    let (last, records, stop) = iterate(start, config, &mut update)?;
    Ok(finish(Method::Krotov, last, records, stop, None))
}
