use crate::dynamics::{propagate_costate_backward, ControlField};
use crate::error::{OctError, Result};
use crate::objective::{terminal_costate, CostBreakdown, PenaltyConfig};

use super::gradient::{cost_gradient, FieldGradient};
use super::{finish, iterate, prepare_initial_field, ControlProblem, Evaluated, LineSearchConfig, Method,
            OptimizationResult, OptimizerConfig, Update};

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Polak–Ribière–Polyak direction `d = g + ζ·d_prev`,
/// `ζ = max(0, gᵀ(g − g_prev) / g_prevᵀg_prev)`.
pub fn prp_direction(
    gradient: &FieldGradient,
    previous_gradient: &FieldGradient,
    previous_direction: &FieldGradient,
) -> FieldGradient {
    let denom = previous_gradient.norm_sqr();
    if denom == 0.0 {
        return gradient.clone();
    }
    let zeta = (gradient.norm_sqr() - gradient.dot(previous_gradient)) / denom;
    gradient.add_scaled(zeta.max(0.0), previous_direction)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearchOutcome {
    /// Accepted step length λ (0 on stall).
    pub step: f64,
    /// Cost at `field + step·direction`.
    pub cost: CostBreakdown,
    pub evaluations: usize,
    pub stalled: bool,
}

struct Search<'a> {
    field: &'a ControlField,
    direction: &'a FieldGradient,
    problem: &'a ControlProblem,
    penalties: &'a PenaltyConfig,
    evaluations: usize,
    best_step: f64,
    best: Option<Evaluated>,
    best_total: f64,
}

impl Search<'_> {
    fn eval(&mut self, step: f64) -> Result<f64> {
        self.evaluations += 1;
        let trial = self.direction.step_field(self.field, step)?;
        let e = Evaluated::new(trial, self.problem, self.penalties)?;
        let total = e.cost.total;
        if total > self.best_total {
            self.best_total = total;
            self.best_step = step;
            self.best = Some(e);
        }
        Ok(total)
    }
}

/// Maximizes `K(field + λ·direction)` over `λ ≥ 0`: bracketing by repeated
/// growth (or shrinking) from `initial_step`, then golden-section
/// refinement. The best evaluated point is returned, so the cost never
/// decreases; if no trial improves on `base`, the search reports a stall.
fn search(
    field: &ControlField,
    direction: &FieldGradient,
    base: &Evaluated,
    problem: &ControlProblem,
    penalties: &PenaltyConfig,
    config: &LineSearchConfig,
    initial_step: f64,
) -> Result<(LineSearchOutcome, Option<Evaluated>)> {
    let mut s = Search {
        field,
        direction,
        problem,
        penalties,
        evaluations: 0,
        best_step: 0.0,
        best: None,
        best_total: base.cost.total,
    };
    let f0 = base.cost.total;
    let max = config.max_evaluations;
    let growth = config.growth;

    let bracket = if direction.max_abs() == 0.0 || !(initial_step > 0.0 && initial_step.is_finite()) {
        None
    } else {
        let first = s.eval(initial_step)?;
        if first > f0 {
            let (mut lo, mut mid, mut f_mid) = (0.0, initial_step, first);
            loop {
                if s.evaluations >= max {
                    break None;
                }
                let hi = mid * growth;
                let f_hi = s.eval(hi)?;
                if f_hi > f_mid {
                    lo = mid;
                    mid = hi;
                    f_mid = f_hi;
                } else {
                    break Some((lo, mid, f_mid, hi));
                }
            }
        } else {
            let mut hi = initial_step;
            loop {
                if s.evaluations >= max {
                    break None;
                }
                let mid = hi / growth;
                let f_mid = s.eval(mid)?;
                if f_mid > f0 {
                    break Some((0.0, mid, f_mid, hi));
                }
                hi = mid;
            }
        }
    };

    if let Some((mut lo, mut mid, mut f_mid, mut hi)) = bracket {
        while hi - lo > config.tolerance * mid && s.evaluations < max {
            let x = if hi - mid > mid - lo {
                mid + GOLDEN * (hi - mid)
            } else {
                mid - GOLDEN * (mid - lo)
            };
            let fx = s.eval(x)?;
            if fx > f_mid {
                if x > mid {
                    lo = mid;
                } else {
                    hi = mid;
                }
                mid = x;
                f_mid = fx;
            } else if x > mid {
                hi = x;
            } else {
                lo = x;
            }
        }
    }

    let stalled = s.best.is_none();
    let outcome = LineSearchOutcome {
        step: s.best_step,
        cost: s.best.as_ref().map_or(base.cost, |e| e.cost),
        evaluations: s.evaluations,
        stalled,
    };
    Ok((outcome, s.best))
}

/// Line search along `direction` starting from `initial_step`.
pub fn line_search(
    field: &ControlField,
    direction: &FieldGradient,
    problem: &ControlProblem,
    penalties: &PenaltyConfig,
    config: &LineSearchConfig,
    initial_step: f64,
) -> Result<LineSearchOutcome> {
    if direction.len() != field.grid().num_nodes() {
        return Err(OctError::GridMismatch {
            context: "search direction and field",
        });
    }
    let base = Evaluated::new(field.clone(), problem, penalties)?;
    search(field, direction, &base, problem, penalties, config, initial_step).map(|(o, _)| o)
}

struct CgUpdate<'a> {
    problem: &'a ControlProblem,
    config: &'a OptimizerConfig,
    previous: Option<(FieldGradient, FieldGradient)>,
    last_step: Option<f64>,
}

fn gradient_at(current: &Evaluated, problem: &ControlProblem, penalties: &PenaltyConfig) -> Result<FieldGradient> {
    let det = problem.detunings;
    let chi_t = terminal_costate(current.trajectory.final_state(), &problem.target);
    let chi = propagate_costate_backward(&chi_t, &current.field, det, &current.trajectory, penalties.beta())?;
    cost_gradient(&current.field, &current.trajectory, &chi, penalties, det)
}

impl Update for CgUpdate<'_> {
    fn next(&mut self, current: &Evaluated) -> Result<Option<Evaluated>> {
        let penalties = &self.config.penalties;
        let g = gradient_at(current, self.problem, penalties)?;
        let mut d = match &self.previous {
            Some((g_prev, d_prev)) => prp_direction(&g, g_prev, d_prev),
            None => g.clone(),
        };
        if d.dot(&g) <= 0.0 {
            d = g.clone();
        }
        let d_max = d.max_abs();
        if d_max == 0.0 {
            return Ok(None);
        }
        let initial_step = self.last_step.unwrap_or(0.1 / d_max);
        let (outcome, best) = search(
            &current.field,
            &d,
            current,
            self.problem,
            penalties,
            &self.config.line_search,
            initial_step,
        )?;
        if outcome.stalled {
            return Ok(None);
        }
        self.last_step = Some(outcome.step);
        self.previous = Some((g, d));
        Ok(best)
    }
}

/// Conjugate-gradient ascent on the discretized cost: exact gradient,
/// Polak–Ribière–Polyak directions with restart, and a bracketing /
/// golden-section line search.
pub fn run_conjugate_gradient(
    initial_field: &ControlField,
    problem: &ControlProblem,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    let field = prepare_initial_field(initial_field, config)?;
    let start = Evaluated::new(field, problem, &config.penalties)?;
    let mut update = CgUpdate {
        problem,
        config,
        previous: None,
        last_step: None,
    };
    let (last, records, stop) = iterate(start, config, &mut update)?;
    let grad_norm = gradient_at(&last, problem, &config.penalties)?.max_abs();
    Ok(finish(Method::ConjugateGradient, last, records, stop, Some(grad_norm)))
}
