use std::fmt::Write as _;
use std::path::Path;

use lambda_oct_core::prelude::{ReferenceMode, ScenarioKind};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::run::{execute_run, RunReport};

/// One row of a comparison: a labelled run, or the reason it could not
/// write its outputs.
#[derive(Debug)]
pub struct ComparisonRow {
    pub label: String,
    pub config: RunConfig,
    pub report: Result<RunReport, String>,
}

impl ComparisonRow {
    pub fn converged(&self) -> bool {
        self.report.as_ref().is_ok_and(RunReport::converged)
    }
}

#[derive(Debug)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    /// True iff there is at least one run and every run converged.
    pub fn all_converged(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(ComparisonRow::converged)
    }

    /// Plain-text tables, one per scenario present: method, α₀, β, P, K,
    /// max ρ₂₂ for population transfer; method, α₀, β, ρ₁₁, ρ₂₂, ρ₃₃,
    /// |ρ₃₁|, P, K (final values) for maximum coherence.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let kinds: Vec<ScenarioKind> = if self.rows.is_empty() {
            vec![ScenarioKind::PopulationTransfer]
        } else {
            let mut kinds: Vec<ScenarioKind> = Vec::new();
            for row in &self.rows {
                if !kinds.contains(&row.config.scenario) {
                    kinds.push(row.config.scenario);
                }
            }
            kinds
        };
        for (n, kind) in kinds.into_iter().enumerate() {
            if n > 0 {
                out.push('\n');
            }
            let rows = self.rows.iter().filter(|r| r.config.scenario == kind);
            match kind {
                ScenarioKind::PopulationTransfer => render_transfer(&mut out, rows),
                ScenarioKind::MaxCoherence => render_coherence(&mut out, rows),
            }
        }
        out
    }
}

fn method_label(config: &RunConfig) -> String {
    match config.reference_mode {
        ReferenceMode::Zero => config.method.to_string(),
        mode => format!("{} ({mode})", config.method),
    }
}

fn status(row: &ComparisonRow) -> String {
    match &row.report {
        Err(e) => format!("FAILED: {e}"),
        Ok(r) => match &r.result {
            Err(e) => format!("FAILED: {e}"),
            Ok(res) => res.stop_reason.as_str().to_string(),
        },
    }
}

fn render_transfer<'a>(out: &mut String, rows: impl Iterator<Item = &'a ComparisonRow>) {
    let _ = writeln!(
        out,
        "{:<12} {:<34} {:>9} {:>6} {:>8} {:>8} {:>8}  status",
        "run", "method", "alpha0", "beta", "P", "K", "max_r22"
    );
    for row in rows {
        let c = &row.config;
        let head = format!("{:<12} {:<34} {:>9} {:>6}", row.label, method_label(c), c.alpha0, c.beta);
        match row.report.as_ref().map(|r| r.result.as_ref()) {
            Ok(Ok(res)) => {
                let s = &res.summary;
                let _ = writeln!(
                    out,
                    "{head} {:>8.4} {:>8.4} {:>8.4}  {}",
                    s.transition_probability,
                    s.cost,
                    s.max_rho22,
                    status(row)
                );
            }
            _ => {
                let _ = writeln!(out, "{head} {:>8} {:>8} {:>8}  {}", "-", "-", "-", status(row));
            }
        }
    }
}

fn render_coherence<'a>(out: &mut String, rows: impl Iterator<Item = &'a ComparisonRow>) {
    let _ = writeln!(
        out,
        "{:<12} {:<34} {:>9} {:>6} {:>7} {:>7} {:>7} {:>7} {:>8} {:>8}  status",
        "run", "method", "alpha0", "beta", "r11", "r22", "r33", "|r31|", "P", "K"
    );
    for row in rows {
        let c = &row.config;
        let head = format!("{:<12} {:<34} {:>9} {:>6}", row.label, method_label(c), c.alpha0, c.beta);
        match row.report.as_ref().map(|r| r.result.as_ref()) {
            Ok(Ok(res)) => {
                let s = &res.summary;
                let p = s.final_populations;
                let _ = writeln!(
                    out,
                    "{head} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>8.4} {:>8.4}  {}",
                    p[0],
                    p[1],
                    p[2],
                    s.final_coherence,
                    s.transition_probability,
                    s.cost,
                    status(row)
                );
            }
            _ => {
                let _ = writeln!(
                    out,
                    "{head} {:>7} {:>7} {:>7} {:>7} {:>8} {:>8}  {}",
                    "-",
                    "-",
                    "-",
                    "-",
                    "-",
                    "-",
                    status(row)
                );
            }
        }
    }
}

/// Runs every labelled config in parallel, each writing into
/// `output_dir/<label>`. A failing run becomes a flagged row and does not
/// stop the others.
pub fn compare_methods(configs: &[(String, RunConfig)], output_dir: &Path) -> Comparison {
    let rows = configs
        .par_iter()
        .map(|(label, config)| ComparisonRow {
            label: label.clone(),
            config: config.clone(),
            report: execute_run(config, &output_dir.join(label)).map_err(|e| e.to_string()),
        })
        .collect();
    Comparison { rows }
}
