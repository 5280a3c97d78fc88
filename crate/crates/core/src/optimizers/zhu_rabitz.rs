use crate::dynamics::ControlField;
use crate::error::Result;
use crate::objective::terminal_costate;

use super::sweep::{backward_sweep, forward_sweep, relaxed_step, FeedbackRule, Relaxation};
use super::{finish, iterate, prepare_initial_field, ControlProblem, Evaluated, Method, OptimizationResult,
            OptimizerConfig, Update};

struct ZhuRabitzUpdate<'a> {
    problem: &'a ControlProblem,
    config: &'a OptimizerConfig,
    relaxation: Relaxation,
}

impl Update for ZhuRabitzUpdate<'_> {
    fn next(&mut self, current: &Evaluated) -> Result<Option<Evaluated>> {
        let penalties = &self.config.penalties;
        let det = self.problem.detunings;
        let field = &current.field;
        let psi = &current.trajectory;
        let problem = self.problem;
        let chi_t = terminal_costate(psi.final_state(), &problem.target);

        // Both sweeps use immediate feedback: backward against the stored
        // ψ^k, forward against the costate just computed.
        relaxed_step(current, &mut self.relaxation, |mu| {
            let rule = FeedbackRule {
                pump_ref: field.pump_ref(),
                stokes_ref: field.stokes_ref(),
                penalties,
                pump_old: field.pump(),
                stokes_old: field.stokes(),
                relaxation: mu,
            };
            let chi = backward_sweep(&chi_t, psi, &rule, det);
            let (pump, stokes, trajectory) = forward_sweep(&problem.initial, &chi, psi, &rule, det);
            let next = field.with_envelopes(pump, stokes)?;
            Evaluated::from_parts(next, trajectory, problem, penalties)
        })
    }
}

/// Zhu–Rabitz iteration. The intermediate-state penalty enters only through
/// the costate source term.
pub fn run_zhu_rabitz(
    initial_field: &ControlField,
    problem: &ControlProblem,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    let field = prepare_initial_field(initial_field, config)?;
    let start = Evaluated::new(field, problem, &config.penalties)?;
    let mut update = ZhuRabitzUpdate {
        problem,
        config,
        relaxation: Relaxation::default(),
    };
    let (last, records, stop) = iterate(start, config, &mut update)?;
    Ok(finish(Method::ZhuRabitz, last, records, stop, None))
}
