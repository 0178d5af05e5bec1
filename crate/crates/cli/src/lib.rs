//! Experiment runner: `key = value` configs, a registry of experiments, and
//! reproducible CSV/JSON artifacts.

pub mod config;
pub mod output;
pub mod registry;

use std::fs;
use std::path::PathBuf;

pub use config::{parse_config, parse_overrides, ConfigError, Format, RunConfig};
pub use output::{Cell, Outcome, Table, VERSION};
pub use registry::{find_experiment, registry, Experiment};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] emergence_core::Error),
    #[error("parameter `{key}`: {reason}")]
    Param { key: &'static str, reason: String },
    #[error("cannot read config `{path}`: {source}")]
    ConfigFile { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Resolves `--config` and the remaining `--key value` flags into a
/// [`RunConfig`].
pub fn config_from_args(args: &[String]) -> Result<RunConfig, RunError> {
    let (file, overrides) = parse_overrides(args)?;
    let text = match &file {
        Some(path) => fs::read_to_string(path).map_err(|source| RunError::ConfigFile { path: path.clone(), source })?,
        None => String::new(),
    };
    Ok(parse_config(&text, &overrides)?)
}

/// Runs the configured experiment and writes its artifacts.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    let exp = find_experiment(cfg.experiment).expect("parse_config resolves the experiment");
    let outcome = (exp.run)(cfg)?;
    output::write_outcome(cfg, &outcome)
}

/// The registry as printed by `list`.
pub fn registry_listing() -> String {
    let mut out = String::new();
    for e in registry() {
        out.push_str(&format!("{}  (replicas {})\n    {}\n", e.name, e.default_replicas, e.about));
        for p in e.params {
            out.push_str(&format!("    --{} <{}> [{}]  {}\n", p.key, p.kind, p.default, p.help));
        }
    }
    out
}
