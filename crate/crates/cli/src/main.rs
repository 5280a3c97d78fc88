use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lambda_oct::{
    compare_methods, execute_run, parse_config, resolve_output_dir, unique_labels, Overrides, RunConfig,
    OUTPUT_DIR_ENV,
};

/// Optimal-control pulse design for a three-level Λ system.
#[derive(Parser)]
#[command(name = "lambda-oct", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one configuration and write its CSV and summary files.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Optimize several configurations and print a comparison table.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Output directory (default: config `output_dir`, then $LAMBDA_OCT_OUTPUT_DIR).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the number of time steps N.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Override the iteration limit.
    #[arg(long = "max-iter", value_name = "K")]
    max_iter: Option<usize>,
    /// Override the convergence threshold γ.
    #[arg(long, value_name = "X")]
    gamma: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            num_steps: self.grid,
            max_iterations: self.max_iter,
            gamma: self.gamma,
        }
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    overrides
        .apply(&mut config)
        .with_context(|| format!("applying overrides to {}", path.display()))?;
    Ok(config)
}

fn env_dir() -> Option<String> {
    std::env::var(OUTPUT_DIR_ENV).ok()
}

fn run(config_path: &Path, common: &Common) -> Result<bool> {
    let config = load(config_path, &common.overrides())?;
    let out = resolve_output_dir(common.out.as_deref(), config.output_dir.as_deref(), env_dir().as_deref());
    let report = execute_run(&config, &out)?;
    let summary = std::fs::read_to_string(out.join(lambda_oct::run::SUMMARY_FILE))?;
    print!("{summary}");
    println!("output_dir = {}", out.display());
    if let Err(e) = &report.result {
        eprintln!("optimization failed: {e}");
    }
    Ok(report.converged())
}

fn compare(paths: &[PathBuf], common: &Common) -> Result<bool> {
    let overrides = common.overrides();
    let configs = paths.iter().map(|p| load(p, &overrides)).collect::<Result<Vec<_>>>()?;
    let labels = unique_labels(paths.iter().map(PathBuf::as_path));
    let out = resolve_output_dir(common.out.as_deref(), None, env_dir().as_deref());
    let labelled: Vec<(String, RunConfig)> = labels.into_iter().zip(configs).collect();
    let comparison = compare_methods(&labelled, &out);
    print!("{}", comparison.render());
    Ok(comparison.all_converged())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, common } => run(config, common),
        Command::Compare { configs, common } => compare(configs, common),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
