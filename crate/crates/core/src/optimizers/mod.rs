//! Iterative pulse optimizers: conjugate gradient with line search, the
//! Zhu–Rabitz immediate-feedback scheme and Krotov's sequential update.

mod conjugate_gradient;
mod gradient;
mod krotov;
mod sweep;
mod zhu_rabitz;

pub use conjugate_gradient::{line_search, prp_direction, run_conjugate_gradient, LineSearchOutcome};
pub use gradient::{cost_gradient, FieldGradient};
pub use krotov::run_krotov;
pub use zhu_rabitz::run_zhu_rabitz;

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{propagate_state_forward, Channel, ControlField, Detunings, QuantumState, Trajectory};
use crate::error::{OctError, Result};
use crate::objective::{
    evaluate_cost, intermediate_population_metrics, raman_coherence, CostBreakdown, PenaltyConfig,
    TargetState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ConjugateGradient,
    ZhuRabitz,
    Krotov,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ConjugateGradient => "conjugate-gradient",
            Method::ZhuRabitz => "zhu-rabitz",
            Method::Krotov => "krotov",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conjugate-gradient" | "cg" => Ok(Method::ConjugateGradient),
            "zhu-rabitz" => Ok(Method::ZhuRabitz),
            "krotov" => Ok(Method::Krotov),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// What the field-energy penalty measures the field against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReferenceMode {
    /// `Ω^r ≡ 0`: penalize the absolute field energy.
    Zero,
    /// `Ω^r` is the initial guess.
    FixedGuess,
    /// `Ω^r` is the field of the previous iteration (Krotov only).
    PreviousIterate,
}

impl ReferenceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReferenceMode::Zero => "zero",
            ReferenceMode::FixedGuess => "fixed-guess",
            ReferenceMode::PreviousIterate => "previous-iterate",
        }
    }
}

impl fmt::Display for ReferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReferenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(ReferenceMode::Zero),
            "fixed-guess" => Ok(ReferenceMode::FixedGuess),
            "previous-iterate" => Ok(ReferenceMode::PreviousIterate),
            other => Err(format!("unknown reference mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearchConfig {
    /// Bracket expansion factor.
    pub growth: f64,
    /// Cap on cost evaluations per search.
    pub max_evaluations: usize,
    /// Relative bracket width at which golden-section refinement stops.
    pub tolerance: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            growth: 2.0,
            max_evaluations: 40,
            tolerance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub method: Method,
    pub penalties: PenaltyConfig,
    pub reference_mode: ReferenceMode,
    pub max_iterations: usize,
    /// Convergence threshold γ on `K^k − K^(k−1)`. May be `+∞`.
    pub convergence_threshold: f64,
    pub line_search: LineSearchConfig,
}

impl OptimizerConfig {
    pub fn new(method: Method, penalties: PenaltyConfig) -> Self {
        Self {
            method,
            penalties,
            reference_mode: ReferenceMode::Zero,
            max_iterations: 1000,
            convergence_threshold: 1e-8,
            line_search: LineSearchConfig::default(),
        }
    }

    pub fn with_reference_mode(mut self, mode: ReferenceMode) -> Self {
        self.reference_mode = mode;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_threshold(mut self, gamma: f64) -> Self {
        self.convergence_threshold = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reference_mode == ReferenceMode::PreviousIterate && self.method != Method::Krotov {
            return Err(OctError::InvalidParameter {
                name: "reference_mode",
                reason: format!("previous-iterate is only available for krotov, not {}", self.method),
            });
        }
        if self.max_iterations == 0 {
            return Err(OctError::InvalidParameter {
                name: "max_iterations",
                reason: "must be positive".into(),
            });
        }
        if self.convergence_threshold.is_nan() || self.convergence_threshold <= 0.0 {
            return Err(OctError::InvalidParameter {
                name: "gamma",
                reason: format!("must be positive, got {}", self.convergence_threshold),
            });
        }
        let ls = &self.line_search;
        if ls.growth.is_nan() || ls.growth <= 1.0 || ls.max_evaluations < 3 || ls.tolerance.is_nan() || ls.tolerance <= 0.0 {
            return Err(OctError::InvalidParameter {
                name: "line_search",
                reason: format!("{ls:?}"),
            });
        }
        Ok(())
    }
}

/// Initial state, target and detunings of a control problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlProblem {
    pub initial: QuantumState,
    pub target: TargetState,
    pub detunings: Detunings,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index `k`.
    pub index: usize,
    pub cost: CostBreakdown,
    pub transition_probability: f64,
    pub max_rho22: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// `ΔK ≤ γ`.
    Converged,
    MaxIterations,
    /// No improving step was found: the line search (conjugate gradient)
    /// or the relaxed sweep (Zhu–Rabitz, Krotov) failed to raise `K`.
    Stalled,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max-iterations",
            StopReason::Stalled => "stalled",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizationSummary {
    pub transition_probability: f64,
    pub cost: f64,
    pub max_rho22: f64,
    pub final_coherence: f64,
    pub final_populations: [f64; 3],
    pub stokes_peak_time: f64,
    pub pump_peak_time: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub method: Method,
    pub final_field: ControlField,
    pub final_trajectory: Trajectory,
    pub records: Vec<IterationRecord>,
    pub summary: OptimizationSummary,
    pub stop_reason: StopReason,
    /// Max-norm of the cost gradient at the returned field (conjugate
    /// gradient only).
    pub final_gradient_max_norm: Option<f64>,
}

impl OptimizationResult {
    pub fn last_record(&self) -> &IterationRecord {
        self.records.last().expect("records are never empty")
    }
}

/// Time of the largest `|Ω|` on a channel (first occurrence).
pub fn peak_time(field: &ControlField, channel: Channel) -> f64 {
    let values = field.channel(channel);
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.abs() > values[best].abs() {
            best = i;
        }
    }
    field.grid().node(best)
}

/// Runs the method selected in `config`.
pub fn optimize(
    initial_field: &ControlField,
    problem: &ControlProblem,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    match config.method {
        Method::ConjugateGradient => run_conjugate_gradient(initial_field, problem, config),
        Method::ZhuRabitz => run_zhu_rabitz(initial_field, problem, config),
        Method::Krotov => run_krotov(initial_field, problem, config),
    }
}

/// A field together with its forward trajectory and cost.
#[derive(Clone, Debug)]
pub(crate) struct Evaluated {
    pub field: ControlField,
    pub trajectory: Trajectory,
    pub cost: CostBreakdown,
}

impl Evaluated {
    pub fn new(field: ControlField, problem: &ControlProblem, penalties: &PenaltyConfig) -> Result<Self> {
        let trajectory = propagate_state_forward(&problem.initial, &field, problem.detunings)?;
        Self::from_parts(field, trajectory, problem, penalties)
    }

    pub fn from_parts(
        field: ControlField,
        trajectory: Trajectory,
        problem: &ControlProblem,
        penalties: &PenaltyConfig,
    ) -> Result<Self> {
        let cost = evaluate_cost(&field, &trajectory, &problem.target, penalties)?;
        Ok(Self {
            field,
            trajectory,
            cost,
        })
    }

    fn record(&self, index: usize) -> IterationRecord {
        IterationRecord {
            index,
            cost: self.cost,
            transition_probability: self.cost.fidelity,
            max_rho22: intermediate_population_metrics(&self.trajectory).max_rho22,
        }
    }
}

/// Applies the reference mode to the starting field.
pub(crate) fn prepare_initial_field(initial: &ControlField, config: &OptimizerConfig) -> Result<ControlField> {
    config.validate()?;
    config.penalties.check_grid(initial.grid())?;
    let mut field = initial.clone();
    let n = field.grid().num_nodes();
    match config.reference_mode {
        ReferenceMode::Zero => field.set_reference(vec![0.0; n], vec![0.0; n])?,
        ReferenceMode::FixedGuess | ReferenceMode::PreviousIterate => {
            field.set_reference(field.pump().to_vec(), field.stokes().to_vec())?
        }
    }
    Ok(field)
}

/// One step of a method: produce the next iterate from the current one, or
/// `None` to signal a stall.
pub(crate) trait Update {
    fn next(&mut self, current: &Evaluated) -> Result<Option<Evaluated>>;
}

/// Shared iteration loop: evaluate, test `ΔK ≤ γ`, update, repeat.
pub(crate) fn iterate<U: Update>(
    start: Evaluated,
    config: &OptimizerConfig,
    update: &mut U,
) -> Result<(Evaluated, Vec<IterationRecord>, StopReason)> {
    let mut current = start;
    let mut records = vec![current.record(1)];
    let stop = loop {
        let k = records.len();
        if k >= 2 {
            let delta = records[k - 1].cost.total - records[k - 2].cost.total;
            if delta <= config.convergence_threshold {
                break StopReason::Converged;
            }
        }
        if k >= config.max_iterations {
            break StopReason::MaxIterations;
        }
        match update.next(&current)? {
            Some(next) => {
                current = next;
                records.push(current.record(k + 1));
            }
            None => break StopReason::Stalled,
        }
    };
    Ok((current, records, stop))
}

pub(crate) fn finish(
    method: Method,
    last: Evaluated,
    records: Vec<IterationRecord>,
    stop_reason: StopReason,
    final_gradient_max_norm: Option<f64>,
) -> OptimizationResult {
    let final_state = *last.trajectory.final_state();
    let record = *records.last().expect("records are never empty");
    let summary = OptimizationSummary {
        transition_probability: record.transition_probability,
        cost: record.cost.total,
        max_rho22: record.max_rho22,
        final_coherence: raman_coherence(&final_state),
        final_populations: final_state.populations(),
        stokes_peak_time: peak_time(&last.field, Channel::Stokes),
        pump_peak_time: peak_time(&last.field, Channel::Pump),
        converged: stop_reason == StopReason::Converged,
    };
    OptimizationResult {
        method,
        final_field: last.field,
        final_trajectory: last.trajectory,
        records,
        summary,
        stop_reason,
        final_gradient_max_norm,
    }
}
