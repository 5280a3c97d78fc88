//! Run configuration documents.
//!
//! A config is a flat TOML table:
//!
//! ```toml
//! scenario = "population-transfer"   # or "max-coherence"
//! method = "zhu-rabitz"              # "conjugate-gradient", "zhu-rabitz", "krotov"
//! alpha0 = 0.0005
//! beta = 1.8
//! reference_mode = "zero"            # "zero", "fixed-guess", "previous-iterate"
//! gamma = 1e-8
//! max_iterations = 1000
//! target_time = 10.0
//! num_steps = 2000
//! omega0 = 1.0
//! t_c = 5.0                          # defaults to target_time / 2
//! tau0 = 1.0
//! output_dir = "out/zr"              # optional
//! seed = 7                           # optional, unused
//! ```
//!
//! `scenario` and `method` are required. Omitted `alpha0` and `beta` take the
//! penalized table values for the scenario and method
//! ([`RunConfig::table_defaults`]); everything else has a fixed default.

use std::path::PathBuf;

use lambda_oct_core::prelude::{Method, ReferenceMode, ScenarioKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TARGET_TIME: f64 = 10.0;
pub const DEFAULT_NUM_STEPS: usize = 2000;
pub const DEFAULT_OMEGA0: f64 = 1.0;
pub const DEFAULT_TAU0: f64 = 1.0;
pub const DEFAULT_GAMMA: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
pub const MIN_NUM_STEPS: usize = 10;

const KEYS: &[&str] = &[
    "scenario",
    "method",
    "alpha0",
    "beta",
    "reference_mode",
    "gamma",
    "max_iterations",
    "target_time",
    "num_steps",
    "omega0",
    "t_c",
    "tau0",
    "output_dir",
    "seed",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    /// Malformed document; the message carries line and column.
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// Name of the offending field, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } | ConfigError::Missing(field) => Some(field),
            ConfigError::UnknownKey(key) => Some(key),
            ConfigError::Syntax(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub method: Method,
    pub alpha0: f64,
    pub beta: f64,
    pub reference_mode: ReferenceMode,
    pub gamma: f64,
    pub max_iterations: usize,
    pub target_time: f64,
    pub num_steps: usize,
    pub omega0: f64,
    pub t_c: f64,
    pub tau0: f64,
    pub output_dir: Option<PathBuf>,
    /// Reserved; the optimizers are deterministic.
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    reference_mode: Option<String>,
    gamma: Option<f64>,
    max_iterations: Option<i64>,
    target_time: Option<f64>,
    num_steps: Option<i64>,
    omega0: Option<f64>,
    t_c: Option<f64>,
    tau0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<i64>,
}

impl RunConfig {
    /// Reference penalty weights `(α₀, β)` for a scenario, method and
    /// reference mode, taken from the penalized benchmark runs. Krotov with
    /// a zero reference uses its population-transfer benchmark row.
    pub fn table_defaults(scenario: ScenarioKind, method: Method, mode: ReferenceMode) -> (f64, f64) {
        match (scenario, method, mode) {
            (ScenarioKind::PopulationTransfer, Method::ConjugateGradient, _) => (5e-5, 1.0),
            (ScenarioKind::PopulationTransfer, Method::ZhuRabitz, _) => (5e-4, 1.8),
            (ScenarioKind::PopulationTransfer, Method::Krotov, ReferenceMode::PreviousIterate) => (0.05, 0.2),
            (ScenarioKind::PopulationTransfer, Method::Krotov, _) => (0.005, 0.2),
            (ScenarioKind::MaxCoherence, Method::ConjugateGradient, _) => (2.5e-4, 0.2),
            (ScenarioKind::MaxCoherence, Method::ZhuRabitz, _) => (5e-4, 1.8),
            (ScenarioKind::MaxCoherence, Method::Krotov, _) => (0.1, 0.2),
        }
    }

    /// A config with every optional field at its default.
    pub fn new(scenario: ScenarioKind, method: Method, alpha0: f64, beta: f64) -> Self {
        Self {
            scenario,
            method,
            alpha0,
            beta,
            reference_mode: ReferenceMode::Zero,
            gamma: DEFAULT_GAMMA,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            target_time: DEFAULT_TARGET_TIME,
            num_steps: DEFAULT_NUM_STEPS,
            omega0: DEFAULT_OMEGA0,
            t_c: 0.5 * DEFAULT_TARGET_TIME,
            tau0: DEFAULT_TAU0,
            output_dir: None,
            seed: None,
        }
    }

    pub fn with_reference_mode(mut self, mode: ReferenceMode) -> Self {
        self.reference_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = |field: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be finite, got {v}")))
            }
        };
        let positive = |field: &'static str, v: f64| {
            finite(field, v)?;
            if v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be positive, got {v}")))
            }
        };
        positive("alpha0", self.alpha0)?;
        finite("beta", self.beta)?;
        if self.beta < 0.0 {
            return Err(ConfigError::invalid("beta", format!("must be non-negative, got {}", self.beta)));
        }
        // γ = +∞ is allowed: it stops after the first improvement check.
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return Err(ConfigError::invalid("gamma", format!("must be positive, got {}", self.gamma)));
        }
        positive("target_time", self.target_time)?;
        positive("tau0", self.tau0)?;
        finite("omega0", self.omega0)?;
        finite("t_c", self.t_c)?;
        if self.num_steps < MIN_NUM_STEPS {
            return Err(ConfigError::invalid(
                "num_steps",
                format!("must be at least {MIN_NUM_STEPS}, got {}", self.num_steps),
            ));
        }
        if self.max_iterations == 0 {
            return Err(ConfigError::invalid("max_iterations", "must be positive"));
        }
        if self.seed.is_some_and(|s| s > i64::MAX as u64) {
            return Err(ConfigError::invalid("seed", "must fit in a signed 64-bit integer"));
        }
        if self.reference_mode == ReferenceMode::PreviousIterate && self.method != Method::Krotov {
            return Err(ConfigError::invalid(
                "reference_mode",
                format!("previous-iterate is only available for krotov, not {}", self.method),
            ));
        }
        Ok(())
    }
}

fn parse_enum<T: std::str::FromStr<Err = String>>(field: &'static str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|e: String| ConfigError::invalid(field, e))
}

fn count(field: &'static str, value: i64) -> Result<usize, ConfigError> {
    usize::try_from(value).map_err(|_| ConfigError::invalid(field, format!("must be non-negative, got {value}")))
}

/// Parses and validates a config document, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    if let Some(key) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    let raw: RawConfig = table.clone().try_into().map_err(|e: toml::de::Error| {
        // Type mismatches do not carry the key; find it by reading each
        // entry on its own.
        let field = KEYS.iter().copied().find(|k| {
            table.get(*k).is_some_and(|v| {
                let mut single = toml::Table::new();
                single.insert(k.to_string(), v.clone());
                single.try_into::<RawConfig>().is_err()
            })
        });
        match field {
            Some(f) => ConfigError::invalid(f, e.message().to_string()),
            None => ConfigError::Syntax(e.to_string()),
        }
    })?;

    let scenario: ScenarioKind = parse_enum("scenario", raw.scenario.as_deref().ok_or(ConfigError::Missing("scenario"))?)?;
    let method: Method = parse_enum("method", raw.method.as_deref().ok_or(ConfigError::Missing("method"))?)?;
    let reference_mode = match raw.reference_mode.as_deref() {
        Some(m) => parse_enum("reference_mode", m)?,
        None => ReferenceMode::Zero,
    };
    let (alpha0, beta) = RunConfig::table_defaults(scenario, method, reference_mode);
    let target_time = raw.target_time.unwrap_or(DEFAULT_TARGET_TIME);
    let config = RunConfig {
        scenario,
        method,
        alpha0: raw.alpha0.unwrap_or(alpha0),
        beta: raw.beta.unwrap_or(beta),
        reference_mode,
        gamma: raw.gamma.unwrap_or(DEFAULT_GAMMA),
        max_iterations: raw
            .max_iterations
            .map(|v| count("max_iterations", v))
            .transpose()?
            .unwrap_or(DEFAULT_MAX_ITERATIONS),
        target_time,
        num_steps: raw
            .num_steps
            .map(|v| count("num_steps", v))
            .transpose()?
            .unwrap_or(DEFAULT_NUM_STEPS),
        omega0: raw.omega0.unwrap_or(DEFAULT_OMEGA0),
        t_c: raw.t_c.unwrap_or(0.5 * target_time),
        tau0: raw.tau0.unwrap_or(DEFAULT_TAU0),
        output_dir: raw.output_dir.map(PathBuf::from),
        seed: raw
            .seed
            .map(|v| u64::try_from(v).map_err(|_| ConfigError::invalid("seed", format!("must be non-negative, got {v}"))))
            .transpose()?,
    };
    config.validate()?;
    Ok(config)
}

/// Renders a config as a document that [`parse_config`] reads back to the
/// same value.
pub fn render_config(config: &RunConfig) -> String {
    let as_i64 = |v: usize| i64::try_from(v).unwrap_or(i64::MAX);
    let raw = RawConfig {
        scenario: Some(config.scenario.as_str().to_string()),
        method: Some(config.method.as_str().to_string()),
        alpha0: Some(config.alpha0),
        beta: Some(config.beta),
        reference_mode: Some(config.reference_mode.as_str().to_string()),
        gamma: Some(config.gamma),
        max_iterations: Some(as_i64(config.max_iterations)),
        target_time: Some(config.target_time),
        num_steps: Some(as_i64(config.num_steps)),
        omega0: Some(config.omega0),
        t_c: Some(config.t_c),
        tau0: Some(config.tau0),
        output_dir: config.output_dir.as_ref().map(|p| p.to_string_lossy().into_owned()),
        seed: config.seed.map(|s| s as i64),
    };
    toml::to_string(&raw).expect("flat tables always serialize")
}
