//! Rotating-wave model of the three-level Λ system and its time propagation.
//!
//! Units: ħ = 1, time in units of the guess pulse width τ₀, Rabi frequencies
//! and detunings in 1/τ₀. Levels are ordered |1⟩ (initial), |2⟩ (excited),
//! |3⟩ (final); the pump couples 1–2 and the Stokes field couples 2–3.

use nalgebra::{Complex, Matrix3, SymmetricEigen, Vector3};

use crate::error::{OctError, Result};

pub type Complex64 = Complex<f64>;
pub type Amplitudes = Vector3<Complex64>;

const NORM_TOLERANCE: f64 = 1e-6;

/// Uniform discretization `t_i = i·T/N`, `i = 0..=N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    target_time: f64,
    num_steps: usize,
}

impl TimeGrid {
    pub fn new(target_time: f64, num_steps: usize) -> Result<Self> {
        if !(target_time.is_finite() && target_time > 0.0) {
            return Err(OctError::InvalidGrid(format!(
                "target time must be finite and positive, got {target_time}"
            )));
        }
        if num_steps == 0 {
            return Err(OctError::InvalidGrid("num_steps must be positive".into()));
        }
        Ok(Self {
            target_time,
            num_steps,
        })
    }

    pub fn target_time(&self) -> f64 {
        self.target_time
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn num_nodes(&self) -> usize {
        self.num_steps + 1
    }

    pub fn step(&self) -> f64 {
        self.target_time / self.num_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i >= self.num_steps {
            self.target_time
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.num_nodes()).map(|i| self.node(i))
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.num_steps {
            0.5 * self.step()
        } else {
            self.step()
        }
    }

    /// Trapezoid rule over node values.
    pub fn integrate<I>(&self, values: I) -> f64
    where
        I: IntoIterator<Item = f64>,
    {
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| self.weight(i) * v)
            .sum()
    }
}

/// Three complex amplitudes `(a₁, a₂, a₃)`. Also used for costates, which
/// are not normalized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumState(Amplitudes);

impl QuantumState {
    pub fn new(a1: Complex64, a2: Complex64, a3: Complex64) -> Self {
        Self(Vector3::new(a1, a2, a3))
    }

    pub fn from_real(a1: f64, a2: f64, a3: f64) -> Self {
        Self::new(a1.into(), a2.into(), a3.into())
    }

    /// Basis state `|level⟩` for `level` in 1..=3.
    pub fn basis(level: usize) -> Self {
        assert!((1..=3).contains(&level), "levels are numbered 1..=3");
        let mut v = Amplitudes::zeros();
        v[level - 1] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn zero() -> Self {
        Self(Amplitudes::zeros())
    }

    pub fn amplitudes(&self) -> &Amplitudes {
        &self.0
    }

    pub fn amplitude(&self, level: usize) -> Complex64 {
        self.0[level - 1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn populations(&self) -> [f64; 3] {
        [
            self.0[0].norm_sqr(),
            self.0[1].norm_sqr(),
            self.0[2].norm_sqr(),
        ]
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self(self.0 * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl From<Amplitudes> for QuantumState {
    fn from(v: Amplitudes) -> Self {
        Self(v)
    }
}

/// Single-photon detunings of the pump and Stokes carriers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Detunings {
    pub pump: f64,
    pub stokes: f64,
}

impl Detunings {
    pub const RESONANT: Detunings = Detunings {
        pump: 0.0,
        stokes: 0.0,
    };

    pub fn is_resonant(&self) -> bool {
        self.pump == 0.0 && self.stokes == 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Pump,
    Stokes,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Pump, Channel::Stokes];
}

/// Sampled real Rabi-frequency envelopes on a [`TimeGrid`], together with
/// reference envelopes used by the field-energy penalty.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlField {
    grid: TimeGrid,
    pump: Vec<f64>,
    stokes: Vec<f64>,
    pump_ref: Vec<f64>,
    stokes_ref: Vec<f64>,
}

fn check_array(name: &'static str, values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(OctError::FieldLength {
            name,
            expected,
            actual: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(OctError::NonFiniteField { name, index });
    }
    Ok(())
}

impl ControlField {
    /// Field with identically zero reference envelopes.
    pub fn new(grid: TimeGrid, pump: Vec<f64>, stokes: Vec<f64>) -> Result<Self> {
        let n = grid.num_nodes();
        Self::with_reference(grid, pump, stokes, vec![0.0; n], vec![0.0; n])
    }

    pub fn with_reference(
        grid: TimeGrid,
        pump: Vec<f64>,
        stokes: Vec<f64>,
        pump_ref: Vec<f64>,
        stokes_ref: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.num_nodes();
        check_array("pump", &pump, n)?;
        check_array("stokes", &stokes, n)?;
        check_array("pump_ref", &pump_ref, n)?;
        check_array("stokes_ref", &stokes_ref, n)?;
        Ok(Self {
            grid,
            pump,
            stokes,
            pump_ref,
            stokes_ref,
        })
    }

    pub fn zero(grid: TimeGrid) -> Self {
        let n = grid.num_nodes();
        Self {
            grid,
            pump: vec![0.0; n],
            stokes: vec![0.0; n],
            pump_ref: vec![0.0; n],
            stokes_ref: vec![0.0; n],
        }
    }

    /// Samples `pump(t)` and `stokes(t)` at the grid nodes.
    pub fn from_fn(
        grid: TimeGrid,
        pump: impl Fn(f64) -> f64,
        stokes: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let p = grid.nodes().map(&pump).collect();
        let s = grid.nodes().map(&stokes).collect();
        Self::new(grid, p, s)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn pump(&self) -> &[f64] {
        &self.pump
    }

    pub fn stokes(&self) -> &[f64] {
        &self.stokes
    }

    pub fn pump_ref(&self) -> &[f64] {
        &self.pump_ref
    }

    pub fn stokes_ref(&self) -> &[f64] {
        &self.stokes_ref
    }

    pub fn channel(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Pump => &self.pump,
            Channel::Stokes => &self.stokes,
        }
    }

    pub fn reference(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Pump => &self.pump_ref,
            Channel::Stokes => &self.stokes_ref,
        }
    }

    /// Replaces both reference envelopes.
    pub fn set_reference(&mut self, pump_ref: Vec<f64>, stokes_ref: Vec<f64>) -> Result<()> {
        let n = self.grid.num_nodes();
        check_array("pump_ref", &pump_ref, n)?;
        check_array("stokes_ref", &stokes_ref, n)?;
        self.pump_ref = pump_ref;
        self.stokes_ref = stokes_ref;
        Ok(())
    }

    /// Same references, new envelopes.
    pub fn with_envelopes(&self, pump: Vec<f64>, stokes: Vec<f64>) -> Result<Self> {
        Self::with_reference(
            self.grid,
            pump,
            stokes,
            self.pump_ref.clone(),
            self.stokes_ref.clone(),
        )
    }

    /// Envelopes averaged over step `i` (between nodes `i` and `i + 1`).
    pub fn midpoint(&self, i: usize) -> (f64, f64) {
        (
            0.5 * (self.pump[i] + self.pump[i + 1]),
            0.5 * (self.stokes[i] + self.stokes[i + 1]),
        )
    }
}

/// State or costate history, one entry per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<QuantumState>,
}

impl Trajectory {
    pub(crate) fn from_states(grid: TimeGrid, states: Vec<QuantumState>) -> Self {
        debug_assert_eq!(states.len(), grid.num_nodes());
        Self { grid, states }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[QuantumState] {
        &self.states
    }

    pub fn initial_state(&self) -> &QuantumState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &QuantumState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Largest `|‖ψ(t_i)‖ − 1|` over the nodes.
    pub fn max_norm_deviation(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Real part of the rotating-frame Hamiltonian (the imaginary part is zero
/// for real envelopes).
pub(crate) fn rwa_hamiltonian_real(pump_rabi: f64, stokes_rabi: f64, det: Detunings) -> Matrix3<f64> {
    Matrix3::new(
        0.0,
        -0.5 * pump_rabi,
        0.0,
        -0.5 * pump_rabi,
        -det.pump,
        -0.5 * stokes_rabi,
        0.0,
        -0.5 * stokes_rabi,
        -(det.pump - det.stokes),
    )
}

/// Rotating-wave Hamiltonian
/// `½·[[0, −Ω_P, 0], [−Ω_P, −2Δ_P, −Ω_S], [0, −Ω_S, −2(Δ_P − Δ_S)]]`.
pub fn rwa_hamiltonian(pump_rabi: f64, stokes_rabi: f64, detunings: Detunings) -> Matrix3<Complex64> {
    rwa_hamiltonian_real(pump_rabi, stokes_rabi, detunings).map(Complex64::from)
}

/// `∂H/∂Ω` for one channel.
pub(crate) fn coupling_derivative(channel: Channel) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    match channel {
        Channel::Pump => {
            m[(0, 1)] = -0.5;
            m[(1, 0)] = -0.5;
        }
        Channel::Stokes => {
            m[(1, 2)] = -0.5;
            m[(2, 1)] = -0.5;
        }
    }
    m
}

/// Exact one-step propagator `exp(−i·H·Δt)` for a piecewise-constant,
/// real-symmetric Hamiltonian, kept in spectral form so that its Fréchet
/// derivative is available as well.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StepPropagator {
    eigenvalues: [f64; 3],
    eigenvectors: Matrix3<f64>,
    phases: [Complex64; 3],
    dt: f64,
}

impl StepPropagator {
    pub(crate) fn new(pump_rabi: f64, stokes_rabi: f64, det: Detunings, dt: f64) -> Self {
        let (eigenvalues, eigenvectors) = if det.is_resonant() {
            resonant_eigensystem(pump_rabi, stokes_rabi)
        } else {
            let eig = SymmetricEigen::new(rwa_hamiltonian_real(pump_rabi, stokes_rabi, det));
            (
                [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]],
                eig.eigenvectors,
            )
        };
        let phases = eigenvalues.map(|l| Complex64::from_polar(1.0, -l * dt));
        Self {
            eigenvalues,
            eigenvectors,
            phases,
            dt,
        }
    }

    /// `U·v`.
    pub(crate) fn apply(&self, v: &Amplitudes) -> Amplitudes {
        let w = self.eigen_coords(v);
        self.lab_coords(&Vector3::new(
            self.phases[0] * w[0],
            self.phases[1] * w[1],
            self.phases[2] * w[2],
        ))
    }

    /// `U†·v`.
    pub(crate) fn apply_adjoint(&self, v: &Amplitudes) -> Amplitudes {
        let w = self.eigen_coords(v);
        self.lab_coords(&Vector3::new(
            self.phases[0].conj() * w[0],
            self.phases[1].conj() * w[1],
            self.phases[2].conj() * w[2],
        ))
    }

    /// Directional derivative `dU[δH]·v` (Daleckii–Krein).
    pub(crate) fn derivative_apply(&self, delta_h: &Matrix3<f64>, v: &Amplitudes) -> Amplitudes {
        let vecs = &self.eigenvectors;
        let rotated = vecs.transpose() * delta_h * vecs;
        let w = self.eigen_coords(v);
        let mut y = Amplitudes::zeros();
        for j in 0..3 {
            for k in 0..3 {
                y[j] += self.divided_difference(j, k) * rotated[(j, k)] * w[k];
            }
        }
        self.lab_coords(&y)
    }

    #[cfg(test)]
    pub(crate) fn unitary(&self) -> Matrix3<Complex64> {
        let vecs = self.eigenvectors.map(Complex64::from);
        let diag = Matrix3::from_diagonal(&Vector3::from(self.phases));
        vecs * diag * vecs.transpose()
    }

    // (f(λj) − f(λk)) / (λj − λk) for f(λ) = exp(−iλΔt), written in a form
    // that stays accurate for (near-)degenerate eigenvalues.
    fn divided_difference(&self, j: usize, k: usize) -> Complex64 {
        let (lj, lk) = (self.eigenvalues[j], self.eigenvalues[k]);
        let half = 0.5 * (lj - lk) * self.dt;
        let sinc = if half.abs() < 1e-8 {
            1.0 - half * half / 6.0
        } else {
            half.sin() / half
        };
        Complex64::new(0.0, -self.dt) * Complex64::from_polar(sinc, -0.5 * (lj + lk) * self.dt)
    }

    fn eigen_coords(&self, v: &Amplitudes) -> Amplitudes {
        let m = &self.eigenvectors;
        Vector3::from_fn(|j, _| {
            v[0] * m[(0, j)] + v[1] * m[(1, j)] + v[2] * m[(2, j)]
        })
    }

    fn lab_coords(&self, w: &Amplitudes) -> Amplitudes {
        let m = &self.eigenvectors;
        Vector3::from_fn(|i, _| {
            w[0] * m[(i, 0)] + w[1] * m[(i, 1)] + w[2] * m[(i, 2)]
        })
    }
}

// Closed-form spectrum of the resonant Hamiltonian: eigenvalue 0 with the
// dark state, ∓r/2 with the bright combinations, r = √(Ω_P² + Ω_S²).
fn resonant_eigensystem(p: f64, s: f64) -> ([f64; 3], Matrix3<f64>) {
    let r = p.hypot(s);
    if r == 0.0 {
        return ([0.0; 3], Matrix3::identity());
    }
    let (pr, sr) = (p / r, s / r);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let vecs = Matrix3::new(
        sr,  h * pr, h * pr,
        0.0, h,      -h,
        -pr, h * sr, h * sr,
    );
    ([0.0, -0.5 * r, 0.5 * r], vecs)
}

fn step_propagator(field: &ControlField, det: Detunings, i: usize) -> StepPropagator {
    let (p, s) = field.midpoint(i);
    StepPropagator::new(p, s, det, field.grid().step())
}

/// Integrates `i·ȧ = H(t)·a` from `t = 0`. Each step applies
/// `exp(−i·H(t_mid)·Δt)` with the envelopes averaged over the step.
pub fn propagate_state_forward(
    initial: &QuantumState,
    field: &ControlField,
    detunings: Detunings,
) -> Result<Trajectory> {
    let norm_sqr = initial.norm_sqr();
    if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
        return Err(OctError::NotNormalized { norm_sqr });
    }
    let grid = *field.grid();
    let mut states = Vec::with_capacity(grid.num_nodes());
    let mut psi = *initial.amplitudes();
    states.push(QuantumState(psi));
    for i in 0..grid.num_steps() {
        psi = step_propagator(field, detunings, i).apply(&psi);
        states.push(QuantumState(psi));
    }
    Ok(Trajectory::from_states(grid, states))
}

/// Integrates the costate equation `ḃ = −i·H·b + β·a₂·ê₂` backward from
/// `b(T) = terminal`.
///
/// The homogeneous part uses the adjoints of the forward step unitaries, so
/// with `beta = 0` this is the exact inverse of the forward sweep. The
/// source is accumulated with the trapezoid rule, which makes the result the
/// exact adjoint of the discretized cost (see [`crate::optimizers::cost_gradient`]).
pub fn propagate_costate_backward(
    terminal: &QuantumState,
    field: &ControlField,
    detunings: Detunings,
    state_trajectory: &Trajectory,
    beta: f64,
) -> Result<Trajectory> {
    if field.grid() != state_trajectory.grid() {
        return Err(OctError::GridMismatch {
            context: "field and state trajectory",
        });
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(OctError::InvalidParameter {
            name: "beta",
            reason: format!("must be finite and non-negative, got {beta}"),
        });
    }
    let grid = *field.grid();
    let half_dt = 0.5 * grid.step();
    let n = grid.num_steps();
    let source = |i: usize| beta * half_dt * state_trajectory.states[i].amplitude(2);

    let mut states = vec![QuantumState::zero(); grid.num_nodes()];
    let mut b = *terminal.amplitudes();
    states[n] = QuantumState(b);
    for i in (0..n).rev() {
        let mut shifted = b;
        shifted[1] -= source(i + 1);
        b = step_propagator(field, detunings, i).apply_adjoint(&shifted);
        b[1] -= source(i);
        states[i] = QuantumState(b);
    }
    Ok(Trajectory::from_states(grid, states))
}

/// Zero-energy eigenstate `(Ω_S, 0, −Ω_P)/√(Ω_P² + Ω_S²)` of the resonant
/// Hamiltonian.
pub fn dark_state(pump_rabi: f64, stokes_rabi: f64) -> Result<QuantumState> {
    let r = pump_rabi.hypot(stokes_rabi);
    if r == 0.0 || !r.is_finite() {
        return Err(OctError::Degenerate(
            "dark state requires a non-zero, finite pump or Stokes coupling",
        ));
    }
    Ok(QuantumState::from_real(stokes_rabi / r, 0.0, -pump_rabi / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(10.0, n).unwrap()
    }

    #[test]
    fn grid_nodes_hit_both_ends() {
        let g = TimeGrid::new(10.0, 3).unwrap();
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes.len(), 4);
        assert_eq!(nodes[0], 0.0);
        assert_eq!(nodes[3], 10.0);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(rwa_hamiltonian(0.0, 0.0, Detunings::RESONANT), Matrix3::zeros());
        let h = rwa_hamiltonian(1.0, 1.0, Detunings::RESONANT);
        for (i, j) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            assert_eq!(h[(i, j)], Complex64::new(-0.5, 0.0));
        }
        for (i, j) in [(0, 0), (1, 1), (2, 2), (0, 2), (2, 0)] {
            assert_eq!(h[(i, j)], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn field_rejects_bad_arrays() {
        let g = grid(4);
        assert!(matches!(
            ControlField::new(g, vec![0.0; 4], vec![0.0; 5]),
            Err(OctError::FieldLength { name: "pump", .. })
        ));
        let mut s = vec![0.0; 5];
        s[2] = f64::NAN;
        assert!(matches!(
            ControlField::new(g, vec![0.0; 5], s),
            Err(OctError::NonFiniteField { name: "stokes", index: 2 })
        ));
    }

    #[test]
    fn spectral_step_matches_taylor_series() {
        for det in [Detunings::RESONANT, Detunings { pump: 0.7, stokes: -0.3 }] {
            let dt = 0.37;
            let h = rwa_hamiltonian(1.3, -0.8, det);
            let a = h * Complex64::new(0.0, -dt);
            let mut term = Matrix3::<Complex64>::identity();
            let mut sum = term;
            for k in 1..40 {
                term = term * a / Complex64::from(k as f64);
                sum += term;
            }
            let u = StepPropagator::new(1.3, -0.8, det, dt).unitary();
            assert!((u - sum).norm() < 1e-13, "{det:?}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let dt = 0.21;
        for det in [Detunings::RESONANT, Detunings { pump: 0.4, stokes: 1.1 }] {
            for (p, s) in [(0.9, 1.7), (0.0, 0.0), (2.0, 0.0)] {
                let v = Vector3::new(
                    Complex64::new(0.3, 0.1),
                    Complex64::new(-0.2, 0.5),
                    Complex64::new(0.7, -0.4),
                );
                for channel in Channel::BOTH {
                    let d = coupling_derivative(channel);
                    let analytic = StepPropagator::new(p, s, det, dt).derivative_apply(&d, &v);
                    let h = 1e-6;
                    let (dp, ds) = match channel {
                        Channel::Pump => (h, 0.0),
                        Channel::Stokes => (0.0, h),
                    };
                    let plus = StepPropagator::new(p + dp, s + ds, det, dt).apply(&v);
                    let minus = StepPropagator::new(p - dp, s - ds, det, dt).apply(&v);
                    let numeric = (plus - minus) / Complex64::from(2.0 * h);
                    assert!((analytic - numeric).norm() < 1e-8, "{det:?} {p} {s} {channel:?}");
                }
            }
        }
    }

    #[test]
    fn zero_field_leaves_state_unchanged() {
        let field = ControlField::zero(grid(50));
        let traj =
            propagate_state_forward(&QuantumState::basis(1), &field, Detunings::RESONANT).unwrap();
        assert_eq!(traj.len(), 51);
        assert!(traj.states().iter().all(|s| *s == QuantumState::basis(1)));
    }

    #[test]
    fn rejects_unnormalized_initial_state() {
        let field = ControlField::zero(grid(10));
        let err = propagate_state_forward(
            &QuantumState::from_real(1.0, 0.1, 0.0),
            &field,
            Detunings::RESONANT,
        )
        .unwrap_err();
        assert!(matches!(err, OctError::NotNormalized { .. }));
    }

    #[test]
    fn costate_examples() {
        let g = grid(40);
        let zero = ControlField::zero(g);
        let traj = propagate_state_forward(&QuantumState::basis(1), &zero, Detunings::RESONANT).unwrap();
        let back = propagate_costate_backward(
            &QuantumState::basis(3),
            &zero,
            Detunings::RESONANT,
            &traj,
            0.0,
        )
        .unwrap();
        assert!(back.states().iter().all(|s| *s == QuantumState::basis(3)));

        // a2 stays zero along this trajectory, so the source vanishes.
        let with_beta = propagate_costate_backward(
            &QuantumState::basis(3),
            &zero,
            Detunings::RESONANT,
            &traj,
            1.0,
        )
        .unwrap();
        assert_eq!(back, with_beta);

        let other = ControlField::zero(grid(41));
        assert!(matches!(
            propagate_costate_backward(&QuantumState::basis(3), &other, Detunings::RESONANT, &traj, 0.0),
            Err(OctError::GridMismatch { .. })
        ));
    }

    #[test]
    fn dark_state_examples() {
        assert_eq!(dark_state(0.0, 1.0).unwrap(), QuantumState::basis(1));
        let d = dark_state(1.0, 1.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(d.amplitude(1).re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(d.amplitude(3).re, -h, epsilon = 1e-15);
        let d = dark_state(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(d.amplitude(1).re, 2.0 / 5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(d.amplitude(3).re, -1.0 / 5f64.sqrt(), epsilon = 1e-15);
        let hc = rwa_hamiltonian(1.0, 2.0, Detunings::RESONANT) * d.amplitudes();
        assert!(hc.norm() < 1e-15);
        assert!(matches!(dark_state(0.0, 0.0), Err(OctError::Degenerate(_))));
    }

    proptest! {
        #[test]
        fn hamiltonian_is_hermitian(p in -50.0..50.0f64, s in -50.0..50.0f64,
                                    dp in -5.0..5.0f64, ds in -5.0..5.0f64) {
            let h = rwa_hamiltonian(p, s, Detunings { pump: dp, stokes: ds });
            prop_assert_eq!(h, h.adjoint());
        }

        #[test]
        fn dark_state_is_annihilated(p in -100.0..100.0f64, s in -100.0..100.0f64) {
            prop_assume!(p.hypot(s) > 1e-6);
            let d = dark_state(p, s).unwrap();
            let hc = rwa_hamiltonian(p, s, Detunings::RESONANT) * d.amplitudes();
            prop_assert!(hc.norm() <= 1e-14 * p.hypot(s).max(1.0));
            prop_assert!((d.norm() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn forward_then_backward_is_identity(
            amps in proptest::collection::vec(-3.0..3.0f64, 2 * 21),
            dp in -1.0..1.0f64,
        ) {
            let g = TimeGrid::new(5.0, 20).unwrap();
            let field = ControlField::new(g, amps[..21].to_vec(), amps[21..].to_vec()).unwrap();
            let det = Detunings { pump: dp, stokes: 0.0 };
            let psi0 = QuantumState::new(
                Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.48), Complex64::new(0.64, 0.0));
            let fwd = propagate_state_forward(&psi0, &field, det).unwrap();
            prop_assert!(fwd.max_norm_deviation() < 1e-12);
            let back = propagate_costate_backward(fwd.final_state(), &field, det, &fwd, 0.0).unwrap();
            for (a, b) in fwd.states().iter().zip(back.states()) {
                prop_assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-12);
            }
        }
    }
}
