//! Gradient, line search and iteration-loop checks against brute-force
//! oracles.

use lambda_oct_core::prelude::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(rng: &mut ChaCha8Rng, grid: TimeGrid, amp: f64) -> ControlField {
    let n = grid.num_nodes();
    let mut wave = || -> Vec<f64> {
        let (a, b, c) = (rng.random_range(-amp..amp), rng.random_range(0.5..3.0), rng.random_range(0.0..6.0));
        let noise: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..0.2)).collect();
        (0..n).map(|i| a * (b * grid.node(i) + c).sin() + noise[i]).collect()
    };
    let pump = wave();
    let stokes = wave();
    let pump_ref = wave();
    let stokes_ref = wave();
    ControlField::with_reference(grid, pump, stokes, pump_ref, stokes_ref).unwrap()
}

fn cost(field: &ControlField, problem: &ControlProblem, penalties: &PenaltyConfig) -> f64 {
    let traj = propagate_state_forward(&problem.initial, field, problem.detunings).unwrap();
    evaluate_cost(field, &traj, &problem.target, penalties).unwrap().total
}

fn gradient(field: &ControlField, problem: &ControlProblem, penalties: &PenaltyConfig) -> FieldGradient {
    let det = problem.detunings;
    let psi = propagate_state_forward(&problem.initial, field, det).unwrap();
    let chi_t = terminal_costate(psi.final_state(), &problem.target);
    let chi = propagate_costate_backward(&chi_t, field, det, &psi, penalties.beta()).unwrap();
    cost_gradient(field, &psi, &chi, penalties, det).unwrap()
}

fn finite_difference(field: &ControlField, problem: &ControlProblem, penalties: &PenaltyConfig, h: f64) -> FieldGradient {
    let n = field.grid().num_nodes();
    let mut fd = FieldGradient::zeros(n);
    for channel in Channel::BOTH {
        for i in 0..n {
            let mut unit = FieldGradient::zeros(n);
            match channel {
                Channel::Pump => unit.pump[i] = 1.0,
                Channel::Stokes => unit.stokes[i] = 1.0,
            }
            let plus = cost(&unit.step_field(field, h).unwrap(), problem, penalties);
            let minus = cost(&unit.step_field(field, -h).unwrap(), problem, penalties);
            let d = (plus - minus) / (2.0 * h);
            match channel {
                Channel::Pump => fd.pump[i] = d,
                Channel::Stokes => fd.stokes[i] = d,
            }
        }
    }
    fd
}

fn relative_error(g: &FieldGradient, fd: &FieldGradient) -> f64 {
    g.add_scaled(-1.0, fd).max_abs() / fd.max_abs()
}

#[test]
fn gradient_matches_central_differences_on_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (k, &n) in [200usize; 20].iter().chain(&[100, 400]).enumerate() {
        let grid = TimeGrid::new(10.0, n).unwrap();
        let kind = if k % 2 == 0 {
            ScenarioKind::PopulationTransfer
        } else {
            ScenarioKind::MaxCoherence
        };
        let mut problem = Scenario::new(kind, grid).problem();
        problem.detunings = Detunings {
            pump: rng.random_range(-1.0..1.0),
            stokes: rng.random_range(-1.0..1.0),
        };
        let penalties = PenaltyConfig::standard(rng.random_range(1e-3..0.1), rng.random_range(0.0..2.0), &grid).unwrap();
        let field = random_field(&mut rng, grid, 2.0);
        let g = gradient(&field, &problem, &penalties);
        let fd = finite_difference(&field, &problem, &penalties, 1e-6);
        let err = relative_error(&g, &fd);
        assert!(err < 1e-4, "case {k} (N = {n}): relative error {err:e}");
    }
}

#[test]
fn line_search_matches_dense_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = TimeGrid::new(10.0, 200).unwrap();
    let scenario = Scenario::new(ScenarioKind::PopulationTransfer, grid);
    let problem = scenario.problem();
    let penalties = PenaltyConfig::standard(0.01, 0.5, &grid).unwrap();
    for _ in 0..3 {
        let field = random_field(&mut rng, grid, 1.0);
        let d = gradient(&field, &problem, &penalties);
        let outcome = line_search(
            &field,
            &d,
            &problem,
            &penalties,
            &LineSearchConfig::default(),
            0.1 / d.max_abs(),
        )
        .unwrap();
        assert!(!outcome.stalled && outcome.step > 0.0);
        let k0 = cost(&field, &problem, &penalties);
        let k_star = outcome.cost.total;
        assert!(k_star > k0);
        assert!((cost(&d.step_field(&field, outcome.step).unwrap(), &problem, &penalties) - k_star).abs() < 1e-14);

        // Around the accepted step the cost along the ray is never
        // noticeably higher than at the step itself.
        let scan_max = (0..=1000)
            .map(|j| cost(&d.step_field(&field, 2.0 * outcome.step * j as f64 / 1000.0).unwrap(), &problem, &penalties))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(scan_max - k_star <= 1e-5 * (k_star - k0), "scan {scan_max} vs search {k_star}");
    }
}

fn stationary_problem() -> ControlProblem {
    ControlProblem {
        initial: QuantumState::basis(1),
        target: TargetState::new(QuantumState::basis(1)).unwrap(),
        detunings: Detunings::RESONANT,
    }
}

#[test]
fn every_method_stops_at_a_stationary_point() {
    let grid = TimeGrid::new(10.0, 200).unwrap();
    let zero = ControlField::new(grid, vec![0.0; 201], vec![0.0; 201]).unwrap();
    let problem = stationary_problem();
    let penalties = PenaltyConfig::standard(0.01, 0.5, &grid).unwrap();
    assert_eq!(gradient(&zero, &problem, &penalties).max_abs(), 0.0);
    for method in [Method::ConjugateGradient, Method::ZhuRabitz, Method::Krotov] {
        let config = OptimizerConfig::new(method, penalties.clone()).with_max_iterations(50);
        let result = optimize(&zero, &problem, &config).unwrap();
        assert_ne!(result.stop_reason, StopReason::MaxIterations, "{method}");
        assert!(result.final_field.pump().iter().chain(result.final_field.stokes()).all(|v| v.abs() < 1e-12));
        assert!((result.summary.cost - 1.0).abs() < 1e-12);
    }
}

fn transfer_run(method: Method, gamma: f64, max_iterations: usize) -> OptimizationResult {
    let grid = TimeGrid::new(10.0, 200).unwrap();
    let scenario = Scenario::new(ScenarioKind::PopulationTransfer, grid);
    let guess = gaussian_guess(&scenario).unwrap();
    let (alpha0, beta) = match method {
        Method::ConjugateGradient => (5e-5, 1.0),
        Method::ZhuRabitz => (5e-4, 1.8),
        Method::Krotov => (0.005, 0.2),
    };
    let penalties = PenaltyConfig::standard(alpha0, beta, &grid).unwrap();
    let config = OptimizerConfig::new(method, penalties)
        .with_threshold(gamma)
        .with_max_iterations(max_iterations);
    optimize(&guess, &scenario.problem(), &config).unwrap()
}

#[test]
fn runs_are_deterministic() {
    for method in [Method::ConjugateGradient, Method::ZhuRabitz, Method::Krotov] {
        let a = transfer_run(method, 1e-6, 30);
        let b = transfer_run(method, 1e-6, 30);
        assert_eq!(a.records, b.records, "{method}");
        assert_eq!(a.final_field, b.final_field, "{method}");
    }
}

#[test]
fn infinite_threshold_stops_after_the_second_record() {
    for method in [Method::ConjugateGradient, Method::ZhuRabitz, Method::Krotov] {
        let result = transfer_run(method, f64::INFINITY, 100);
        assert_eq!(result.records.len(), 2, "{method}");
        assert_eq!(result.stop_reason, StopReason::Converged);
        assert_eq!(result.records[0].index, 1);
        assert_eq!(result.records[1].index, 2);
    }
}

#[test]
fn iteration_records_never_decrease() {
    for method in [Method::ConjugateGradient, Method::ZhuRabitz, Method::Krotov] {
        let result = transfer_run(method, 1e-7, 200);
        assert!(result.records.len() <= 200);
        for pair in result.records.windows(2) {
            assert!(pair[1].cost.total >= pair[0].cost.total, "{method}");
        }
    }
}

#[test]
fn tighter_threshold_leaves_a_smaller_gradient() {
    let norms: Vec<f64> = [1e-3, 1e-5, 1e-7]
        .iter()
        .map(|&gamma| transfer_run(Method::ConjugateGradient, gamma, 2000).final_gradient_max_norm.unwrap())
        .collect();
    assert!(norms[0] >= norms[1] && norms[1] >= norms[2], "{norms:?}");
    assert!(norms[2] < norms[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_predicts_directional_change(seed in any::<u64>(), beta in 0.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = TimeGrid::new(10.0, 60).unwrap();
        let problem = Scenario::new(ScenarioKind::PopulationTransfer, grid).problem();
        let penalties = PenaltyConfig::standard(0.01, beta, &grid).unwrap();
        let field = random_field(&mut rng, grid, 2.0);
        let direction = random_field(&mut rng, grid, 1.0);
        let d = FieldGradient { pump: direction.pump().to_vec(), stokes: direction.stokes().to_vec() };
        let h = 1e-5;
        let fd = (cost(&d.step_field(&field, h).unwrap(), &problem, &penalties)
            - cost(&d.step_field(&field, -h).unwrap(), &problem, &penalties)) / (2.0 * h);
        let g = gradient(&field, &problem, &penalties).dot(&d);
        prop_assert!((g - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "{} vs {}", g, fd);
    }

    #[test]
    fn prp_direction_is_an_ascent_direction_or_restart(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vec = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let g = FieldGradient { pump: vec(8), stokes: vec(8) };
        let g_prev = FieldGradient { pump: vec(8), stokes: vec(8) };
        let d_prev = FieldGradient { pump: vec(8), stokes: vec(8) };
        let d = prp_direction(&g, &g_prev, &d_prev);
        let zeta = ((g.norm_sqr() - g.dot(&g_prev)) / g_prev.norm_sqr()).max(0.0);
        let expected = g.add_scaled(zeta, &d_prev);
        prop_assert!(d.add_scaled(-1.0, &expected).max_abs() < 1e-12);
    }
}
