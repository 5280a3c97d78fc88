//! The two control problems: complete transfer |1⟩ → |3⟩ and creation of the
//! maximally coherent superposition (|1⟩ − |3⟩)/√2.

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{Channel, ControlField, Detunings, QuantumState, TimeGrid};
use crate::error::{OctError, Result};
use crate::objective::TargetState;
use crate::optimizers::{peak_time, ControlProblem, OptimizationResult};

pub const DEFAULT_TARGET_TIME: f64 = 10.0;
pub const DEFAULT_NUM_STEPS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    PopulationTransfer,
    MaxCoherence,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::PopulationTransfer => "population-transfer",
            ScenarioKind::MaxCoherence => "max-coherence",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "population-transfer" => Ok(ScenarioKind::PopulationTransfer),
            "max-coherence" => Ok(ScenarioKind::MaxCoherence),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

/// Parameters of the Gaussian starting envelopes
/// `Ω₀·exp(−(t − t_c)²/(2τ₀²))`, shared by pump and Stokes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianGuess {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianGuess {
    pub fn standard(grid: &TimeGrid) -> Self {
        Self {
            amplitude: 1.0,
            center: 0.5 * grid.target_time(),
            width: 1.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (-(t - self.center).powi(2) / (2.0 * self.width * self.width)).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub initial_state: QuantumState,
    pub target: TargetState,
    pub detunings: Detunings,
    pub guess: GaussianGuess,
    pub grid: TimeGrid,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, grid: TimeGrid) -> Self {
        let target = match kind {
            ScenarioKind::PopulationTransfer => QuantumState::basis(3),
            ScenarioKind::MaxCoherence => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                QuantumState::from_real(h, 0.0, -h)
            }
        };
        Self {
            kind,
            initial_state: QuantumState::basis(1),
            target: TargetState::new(target).expect("scenario targets are normalized"),
            detunings: Detunings::RESONANT,
            guess: GaussianGuess::standard(&grid),
            grid,
        }
    }

    /// `T = 10`, `N = 2000`.
    pub fn with_default_grid(kind: ScenarioKind) -> Self {
        let grid = TimeGrid::new(DEFAULT_TARGET_TIME, DEFAULT_NUM_STEPS).expect("default grid is valid");
        Self::new(kind, grid)
    }

    pub fn population_transfer() -> Self {
        Self::with_default_grid(ScenarioKind::PopulationTransfer)
    }

    pub fn max_coherence() -> Self {
        Self::with_default_grid(ScenarioKind::MaxCoherence)
    }

    pub fn with_guess(mut self, guess: GaussianGuess) -> Self {
        self.guess = guess;
        self
    }

    pub fn problem(&self) -> ControlProblem {
        ControlProblem {
            initial: self.initial_state,
            target: self.target,
            detunings: self.detunings,
        }
    }
}

/// Identical Gaussian pump and Stokes envelopes with zero references.
pub fn gaussian_guess(scenario: &Scenario) -> Result<ControlField> {
    let g = scenario.guess;
    if !(g.width > 0.0 && g.width.is_finite()) {
        return Err(OctError::InvalidParameter {
            name: "tau0",
            reason: format!("must be finite and positive, got {}", g.width),
        });
    }
    ControlField::from_fn(scenario.grid, |t| g.value(t), |t| g.value(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ordering {
    /// Pump peaks first.
    Intuitive,
    /// Stokes peaks first.
    Counterintuitive,
    Simultaneous,
}

impl Ordering {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ordering::Intuitive => "intuitive",
            Ordering::Counterintuitive => "counterintuitive",
            Ordering::Simultaneous => "simultaneous",
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mechanism {
    pub ordering: Ordering,
    pub half_stirap: bool,
}

/// Peaks closer than this fraction of τ₀ count as simultaneous.
const SIMULTANEITY: f64 = 0.1;
/// Trailing-edge window: both envelopes above this fraction of their peak.
const WINDOW_LEVEL: f64 = 0.1;
/// Allowed deviation of Ω_P/Ω_S from 1 inside the window.
const RATIO_TOLERANCE: f64 = 0.1;

/// Classifies pulse ordering by peak times and detects the half-STIRAP
/// signature: Stokes first, then both envelopes switching off together
/// with `Ω_P/Ω_S ≈ 1`.
pub fn classify_field(field: &ControlField, tau0: f64) -> Result<Mechanism> {
    let pump = field.pump();
    let stokes = field.stokes();
    let peak = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (pump_peak, stokes_peak) = (peak(pump), peak(stokes));
    let scale = pump_peak.max(stokes_peak);
    if scale == 0.0 || pump_peak < 1e-3 * scale || stokes_peak < 1e-3 * scale {
        return Err(OctError::Degenerate("pump or Stokes envelope is essentially zero"));
    }
    let t_pump = peak_time(field, Channel::Pump);
    let t_stokes = peak_time(field, Channel::Stokes);
    let ordering = if (t_pump - t_stokes).abs() < SIMULTANEITY * tau0 {
        Ordering::Simultaneous
    } else if t_stokes < t_pump {
        Ordering::Counterintuitive
    } else {
        Ordering::Intuitive
    };

    let half_stirap = ordering == Ordering::Counterintuitive && {
        let grid = field.grid();
        let mut window = (0..grid.num_nodes())
            .filter(|&i| grid.node(i) >= t_pump)
            .filter(|&i| pump[i].abs() > WINDOW_LEVEL * pump_peak && stokes[i].abs() > WINDOW_LEVEL * stokes_peak)
            .peekable();
        window.peek().is_some() && window.all(|i| (pump[i] / stokes[i] - 1.0).abs() < RATIO_TOLERANCE)
    };
    Ok(Mechanism {
        ordering,
        half_stirap,
    })
}

/// [`classify_field`] applied to an optimized field.
pub fn classify_mechanism(result: &OptimizationResult, tau0: f64) -> Result<Mechanism> {
    classify_field(&result.final_field, tau0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(10.0, 1000).unwrap()
    }

    fn gauss(center: f64, amp: f64) -> impl Fn(f64) -> f64 {
        move |t| amp * (-(t - center).powi(2) / 2.0).exp()
    }

    #[test]
    fn scenario_targets() {
        for kind in [ScenarioKind::PopulationTransfer, ScenarioKind::MaxCoherence] {
            let s = Scenario::with_default_grid(kind);
            assert_eq!(s.initial_state, QuantumState::basis(1));
            assert!((s.target.state().norm() - 1.0).abs() < 1e-15);
            assert_eq!(s.target.state().amplitude(2).norm(), 0.0);
            assert_eq!(s.grid.num_steps(), 2000);
        }
        let c = Scenario::max_coherence();
        assert!(c.target.state().amplitude(3).re < 0.0);
    }

    #[test]
    fn gaussian_guess_examples() {
        let s = Scenario::new(ScenarioKind::PopulationTransfer, grid());
        let f = gaussian_guess(&s).unwrap();
        assert_eq!(f.pump()[500], 1.0);
        assert_eq!(f.pump(), f.stokes());
        assert!(f.pump_ref().iter().all(|&v| v == 0.0));
        assert_abs_diff_eq!(f.pump()[300], (-2.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.pump()[300], 0.1353352832, epsilon = 1e-10);
        for k in 1..500 {
            assert_abs_diff_eq!(f.pump()[500 + k], f.pump()[500 - k], epsilon = 1e-15);
        }
        let bad = s.with_guess(GaussianGuess { amplitude: 1.0, center: 5.0, width: 0.0 });
        assert!(gaussian_guess(&bad).is_err());
    }

    #[test]
    fn ordering_examples() {
        let g = grid();
        let ci = ControlField::from_fn(g, gauss(6.0, 1.0), gauss(4.0, 1.0)).unwrap();
        assert_eq!(classify_field(&ci, 1.0).unwrap().ordering, Ordering::Counterintuitive);
        let int = ControlField::from_fn(g, gauss(4.0, 1.0), gauss(6.0, 1.0)).unwrap();
        assert_eq!(classify_field(&int, 1.0).unwrap().ordering, Ordering::Intuitive);
        let same = ControlField::from_fn(g, gauss(5.0, 1.0), gauss(5.0, 1.0)).unwrap();
        let m = classify_field(&same, 1.0).unwrap();
        assert_eq!(m.ordering, Ordering::Simultaneous);
        assert!(!m.half_stirap);
        // Plain STIRAP pair: ratio sweeps through 1, no equal tails.
        assert!(!classify_field(&ci, 1.0).unwrap().half_stirap);
        assert!(matches!(
            classify_field(&ControlField::zero(g), 1.0),
            Err(OctError::Degenerate(_))
        ));
    }

    #[test]
    fn detects_half_stirap_pair() {
        // Mixing angle θ(t) rises from 0 to π/4 and stays there while a
        // common envelope switches both pulses off; Ω_P = A·sin θ,
        // Ω_S = A·cos θ.
        let g = grid();
        let theta = |t: f64| std::f64::consts::FRAC_PI_4 / (1.0 + (-(t - 4.0) / 0.4f64).exp());
        let env = gauss(5.0, 10.0);
        let pump = |t: f64| env(t) * theta(t).sin();
        let stokes = |t: f64| {
            let early = 10.0 * (-(t - 3.0f64).powi(2) / 2.0).exp();
            env(t) * theta(t).cos() + early * (1.0 - theta(t) / std::f64::consts::FRAC_PI_4)
        };
        let field = ControlField::from_fn(g, pump, stokes).unwrap();
        let m = classify_field(&field, 1.0).unwrap();
        assert_eq!(m.ordering, Ordering::Counterintuitive);
        assert!(m.half_stirap);
    }

    proptest! {
        #[test]
        fn classification_is_scale_invariant(c in 0.01..100.0f64, tp in 3.0..7.0f64, ts in 3.0..7.0f64) {
            let g = TimeGrid::new(10.0, 400).unwrap();
            let f = ControlField::from_fn(g, gauss(tp, 1.0), gauss(ts, 0.7)).unwrap();
            let scaled = ControlField::from_fn(g, gauss(tp, c), gauss(ts, 0.7 * c)).unwrap();
            prop_assert_eq!(classify_field(&f, 1.0).unwrap(), classify_field(&scaled, 1.0).unwrap());
        }
    }
}
