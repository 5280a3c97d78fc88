use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lambda_oct_core::prelude::*;
use thiserror::Error;

use crate::config::RunConfig;

pub const FIELD_FILE: &str = "field.csv";
pub const POPULATIONS_FILE: &str = "populations.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Outcome of one configured run. An optimizer failure is not an error of
/// the run itself: it is reported here and in the summary file.
#[derive(Debug)]
pub struct RunReport {
    pub config: RunConfig,
    pub output_dir: PathBuf,
    pub result: Result<OptimizationResult, OctError>,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.result.as_ref().is_ok_and(|r| r.summary.converged)
    }
}

/// 12 significant digits, scientific notation, locale independent.
pub fn format_number(x: f64) -> String {
    format!("{x:.11e}")
}

/// Builds the scenario, guess and optimizer settings of `config` and runs
/// the optimizer.
pub fn optimize_config(config: &RunConfig) -> Result<OptimizationResult, OctError> {
    let grid = TimeGrid::new(config.target_time, config.num_steps)?;
    let scenario = Scenario::new(config.scenario, grid).with_guess(GaussianGuess {
        amplitude: config.omega0,
        center: config.t_c,
        width: config.tau0,
    });
    let guess = gaussian_guess(&scenario)?;
    let penalties = PenaltyConfig::standard(config.alpha0, config.beta, &grid)?;
    let optimizer = OptimizerConfig::new(config.method, penalties)
        .with_reference_mode(config.reference_mode)
        .with_max_iterations(config.max_iterations)
        .with_threshold(config.gamma);
    optimize(&guess, &scenario.problem(), &optimizer)
}

/// Runs `config` and writes `field.csv`, `populations.csv`,
/// `convergence.csv` and `summary.txt` into `output_dir`. After an
/// optimizer failure only the summary is written.
pub fn execute_run(config: &RunConfig, output_dir: &Path) -> Result<RunReport, RunError> {
    let result = optimize_config(config);
    write_outputs(config, output_dir, &result)?;
    Ok(RunReport {
        config: config.clone(),
        output_dir: output_dir.to_path_buf(),
        result,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
}

pub fn write_outputs(
    config: &RunConfig,
    dir: &Path,
    result: &Result<OptimizationResult, OctError>,
) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    if let Ok(r) = result {
        write_file(dir, FIELD_FILE, &field_csv(&r.final_field))?;
        write_file(dir, POPULATIONS_FILE, &populations_csv(&r.final_trajectory))?;
        write_file(dir, CONVERGENCE_FILE, &convergence_csv(&r.records))?;
    }
    write_file(dir, SUMMARY_FILE, &summary_text(config, result))
}

fn csv<const W: usize>(header: [&str; W], rows: impl Iterator<Item = [f64; W]>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn field_csv(field: &ControlField) -> String {
    let grid = field.grid();
    csv(
        ["t", "omega_p", "omega_s"],
        (0..grid.num_nodes()).map(|i| [grid.node(i), field.pump()[i], field.stokes()[i]]),
    )
}

pub fn populations_csv(trajectory: &Trajectory) -> String {
    let grid = trajectory.grid();
    csv(
        ["t", "rho11", "rho22", "rho33", "abs_rho31"],
        trajectory.states().iter().enumerate().map(|(i, s)| {
            let p = s.populations();
            [grid.node(i), p[0], p[1], p[2], raman_coherence(s)]
        }),
    )
}

pub fn convergence_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from("iteration,P,K,field_penalty,state_penalty\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.index,
            format_number(r.transition_probability),
            format_number(r.cost.total),
            format_number(r.cost.field_penalty),
            format_number(r.cost.state_penalty),
        );
    }
    out
}

/// Flat `key = value` summary of a run.
pub fn summary_text(config: &RunConfig, result: &Result<OptimizationResult, OctError>) -> String {
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    put("scenario", config.scenario.to_string());
    put("method", config.method.to_string());
    put("reference_mode", config.reference_mode.to_string());
    put("alpha0", format_number(config.alpha0));
    put("beta", format_number(config.beta));
    put("gamma", format_number(config.gamma));
    put("max_iterations", config.max_iterations.to_string());
    put("target_time", format_number(config.target_time));
    put("num_steps", config.num_steps.to_string());
    match result {
        Err(e) => {
            put("converged", "false".into());
            put("error", e.to_string());
        }
        Ok(r) => {
            let s = &r.summary;
            let last = r.last_record();
            let metrics = intermediate_population_metrics(&r.final_trajectory);
            put("converged", s.converged.to_string());
            put("stop_reason", r.stop_reason.as_str().into());
            put("iterations", r.records.len().to_string());
            put("P", format_number(s.transition_probability));
            put("K", format_number(s.cost));
            put("field_penalty", format_number(last.cost.field_penalty));
            put("state_penalty", format_number(last.cost.state_penalty));
            put("max_rho22", format_number(s.max_rho22));
            put("integral_rho22", format_number(metrics.integral_rho22));
            put("rho11_T", format_number(s.final_populations[0]));
            put("rho22_T", format_number(s.final_populations[1]));
            put("rho33_T", format_number(s.final_populations[2]));
            put("abs_rho31_T", format_number(s.final_coherence));
            put("pump_peak_time", format_number(s.pump_peak_time));
            put("stokes_peak_time", format_number(s.stokes_peak_time));
            match classify_mechanism(r, config.tau0) {
                Ok(m) => {
                    put("ordering", m.ordering.to_string());
                    put("half_stirap", m.half_stirap.to_string());
                }
                Err(_) => put("ordering", "degenerate".into()),
            }
            if let Some(g) = r.final_gradient_max_norm {
                put("final_gradient_max_norm", format_number(g));
            }
        }
    }
    out
}
