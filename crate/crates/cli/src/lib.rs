//! Command-line front end for `lambda-oct-core`: TOML run configs,
//! single runs with CSV output, and side-by-side method comparisons.

pub mod compare;
pub mod config;
pub mod run;

use std::path::{Path, PathBuf};

pub use compare::{compare_methods, Comparison, ComparisonRow};
pub use config::{parse_config, render_config, ConfigError, RunConfig};
pub use run::{execute_run, format_number, RunError, RunReport};

/// Environment variable holding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "LAMBDA_OCT_OUTPUT_DIR";
/// Used when neither a flag, a config nor the environment names one.
pub const DEFAULT_OUTPUT_DIR: &str = "lambda-oct-output";

/// Command-line overrides applied on top of a parsed config.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub num_steps: Option<usize>,
    pub max_iterations: Option<usize>,
    pub gamma: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) -> Result<(), ConfigError> {
        if let Some(n) = self.num_steps {
            config.num_steps = n;
        }
        if let Some(k) = self.max_iterations {
            config.max_iterations = k;
        }
        if let Some(g) = self.gamma {
            config.gamma = g;
        }
        config.validate()
    }
}

/// Output directory precedence: flag, then the config's `output_dir`,
/// then the environment, then [`DEFAULT_OUTPUT_DIR`].
pub fn resolve_output_dir(flag: Option<&Path>, config: Option<&Path>, env: Option<&str>) -> PathBuf {
    flag.or(config)
        .map(Path::to_path_buf)
        .or_else(|| env.filter(|e| !e.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// Distinct labels for compare subdirectories from config file stems,
/// suffixing repeats with `-2`, `-3`, ….
pub fn unique_labels<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for path in paths {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| "run".into());
        let mut label = stem.clone();
        let mut n = 2;
        while labels.contains(&label) {
            label = format!("{stem}-{n}");
            n += 1;
        }
        labels.push(label);
    }
    labels
}
