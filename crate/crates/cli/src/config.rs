//! `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::registry::{find_experiment, registry, Experiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Real,
    Str,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Int => "integer",
            Kind::Real => "real",
            Kind::Str => "string",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) => write!(f, "{v}"),
            Value::Str(v) => f.write_str(v),
        }
    }
}

impl Value {
    pub fn parse(kind: Kind, text: &str) -> Option<Value> {
        match kind {
            Kind::Int => text.parse().ok().map(Value::Int),
            Kind::Real => text.parse::<f64>().ok().filter(|v| v.is_finite()).map(Value::Real),
            Kind::Str => Some(Value::Str(text.to_string())),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Int(v) => (*v).into(),
            Value::Real(v) => (*v).into(),
            Value::Str(v) => v.clone().into(),
        }
    }
}

/// One typed parameter of an experiment.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

/// Where a setting came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    CommandLine,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::CommandLine => f.write_str("command line"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: expected `key = value`, found `{text}`")]
    Syntax { origin: Origin, text: String },
    #[error("{origin}: unknown key `{key}` for experiment `{experiment}` (known: {known})")]
    UnknownKey { origin: Origin, key: String, experiment: String, known: String },
    #[error("{origin}: key `{key}` expects {expected}, got `{found}`")]
    Type { origin: Origin, key: String, expected: Kind, found: String },
    #[error("no experiment named; use --experiment <name>")]
    MissingExperiment,
    #[error("unknown experiment `{name}`; registered: {known}")]
    UnknownExperiment { name: String, known: String },
    #[error("flag `{0}` needs a value")]
    MissingValue(String),
    #[error("expected a `--key` flag, found `{0}`")]
    StrayArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: &'static str,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub out: PathBuf,
    pub replicas: usize,
    pub format: Format,
}

const RESERVED: [(&str, Kind); 5] = [
    ("experiment", Kind::Str),
    ("seed", Kind::Int),
    ("out", Kind::Str),
    ("replicas", Kind::Int),
    ("format", Kind::Str),
];

/// Splits `--key value` / `--key=value` pairs. `--config <file>` is
/// returned separately.
pub fn parse_overrides(args: &[String]) -> Result<(Option<PathBuf>, Vec<(String, String)>), ConfigError> {
    let mut config = None;
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(ConfigError::StrayArgument(arg.clone()));
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| ConfigError::MissingValue(arg.clone()))?;
                (flag.to_string(), v.clone())
            }
        };
        let key = key.replace('-', "_");
        if key == "config" {
            config = Some(PathBuf::from(value));
        } else {
            pairs.push((key, value));
        }
    }
    Ok((config, pairs))
}

fn parse_lines(text: &str) -> Result<Vec<(String, String, Origin)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::Line(i + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { origin, text: raw.trim().to_string() });
        };
        let (k, v) = (k.trim(), v.trim().trim_matches('"'));
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax { origin, text: raw.trim().to_string() });
        }
        out.push((k.to_string(), v.to_string(), origin));
    }
    Ok(out)
}

fn known_names() -> String {
    registry().iter().map(|e| e.name).collect::<Vec<_>>().join(", ")
}

/// Builds a run configuration from the file `text` and command-line
/// `overrides`, which take precedence. Unset parameters take the
/// experiment's defaults.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut entries = parse_lines(text)?;
    entries.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone(), Origin::CommandLine)));

    let name = entries
        .iter()
        .rev()
        .find(|(k, ..)| k == "experiment")
        .map(|(_, v, _)| v.clone())
        .ok_or(ConfigError::MissingExperiment)?;
    let exp: &Experiment =
        find_experiment(&name).ok_or_else(|| ConfigError::UnknownExperiment { name, known: known_names() })?;

    let mut params: BTreeMap<String, Value> = BTreeMap::new();
    for spec in exp.params {
        let v = Value::parse(spec.kind, spec.default).expect("registry defaults parse");
        params.insert(spec.key.to_string(), v);
    }
    let mut cfg = RunConfig {
        experiment: exp.name,
        params,
        seed: 0,
        out: PathBuf::from("."),
        replicas: exp.default_replicas,
        format: Format::Csv,
    };
    for (key, text, origin) in entries {
        let kind = RESERVED
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, kind)| *kind)
            .or_else(|| exp.params.iter().find(|p| p.key == key).map(|p| p.kind));
        let Some(kind) = kind else {
            let known = exp.params.iter().map(|p| p.key).collect::<Vec<_>>().join(", ");
            return Err(ConfigError::UnknownKey { origin, key, experiment: exp.name.to_string(), known });
        };
        let type_err = |expected: Kind| ConfigError::Type { origin, key: key.clone(), expected, found: text.clone() };
        let value = Value::parse(kind, &text).ok_or_else(|| type_err(kind))?;
        match key.as_str() {
            "experiment" => {}
            "seed" => cfg.seed = text.parse().map_err(|_| type_err(Kind::Int))?,
            "out" => cfg.out = PathBuf::from(text.clone()),
            "replicas" => {
                cfg.replicas = text.parse().ok().filter(|&r: &usize| r > 0).ok_or_else(|| type_err(Kind::Int))?
            }
            "format" => {
                cfg.format = match text.as_str() {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(type_err(Kind::Str)),
                }
            }
            _ => {
                cfg.params.insert(key.clone(), value);
            }
        }
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn real(&self, key: &str) -> f64 {
        match self.params.get(key) {
            Some(Value::Real(v)) => *v,
            Some(Value::Int(v)) => *v as f64,
            other => panic!("parameter `{key}` is not real: {other:?}"),
        }
    }

    pub fn int(&self, key: &str) -> i64 {
        match self.params.get(key) {
            Some(Value::Int(v)) => *v,
            other => panic!("parameter `{key}` is not an integer: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.params.get(key) {
            Some(Value::Str(v)) => v,
            other => panic!("parameter `{key}` is not a string: {other:?}"),
        }
    }

    /// Every setting as `(key, value)` pairs, in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("experiment".to_string(), self.experiment.to_string()),
            ("replicas".to_string(), self.replicas.to_string()),
            ("format".to_string(), self.format.extension().to_string()),
        ];
        out.extend(self.params.iter().map(|(k, v)| (k.clone(), v.to_string())));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn empty_file_takes_defaults() {
        let cfg = parse_config("", &ov(&[("experiment", "moment_duality")])).unwrap();
        assert_eq!(cfg.experiment, "duality_moment");
        assert_eq!(cfg.real("x0"), 0.3);
        assert_eq!(cfg.int("k"), 2);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn command_line_wins() {
        let cfg = parse_config("experiment = duality_moment\nd = 1.0\n", &ov(&[("d", "2.0")])).unwrap();
        assert_eq!(cfg.real("d"), 2.0);
    }

    #[test]
    fn malformed_value_names_key_and_line() {
        let err = parse_config("experiment = duality_moment\n\nd = abc\n", &[]).unwrap_err();
        assert_eq!(
            err,
            ConfigError::Type { origin: Origin::Line(3), key: "d".into(), expected: Kind::Real, found: "abc".into() }
        );
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("`d`"), "{msg}");
    }

    #[test]
    fn unknown_keys_and_experiments_are_rejected() {
        let err = parse_config("experiment = duality_moment\nbogus = 1\n", &[]).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { origin: Origin::Line(2), .. }));
        let err = parse_config("", &ov(&[("experiment", "nope")])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("emergence_scaling") && msg.contains("single_site_timescale"), "{msg}");
        assert_eq!(parse_config("# nothing\n", &[]).unwrap_err(), ConfigError::MissingExperiment);
    }

    #[test]
    fn syntax_errors_report_line() {
        let err = parse_config("experiment = cmj_alpha\njust words\n", &[]).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { origin: Origin::Line(2), .. }));
    }

    #[test]
    fn reserved_keys() {
        let cfg = parse_config(
            "experiment = cmj_alpha\nseed = 42\nreplicas = 7\nformat = json\nout = /tmp/x\n",
            &ov(&[("seed", "43")]),
        )
        .unwrap();
        assert_eq!((cfg.seed, cfg.replicas, cfg.format), (43, 7, Format::Json));
        assert_eq!(cfg.out, PathBuf::from("/tmp/x"));
        assert!(parse_config("experiment = cmj_alpha\nreplicas = 0\n", &[]).is_err());
        assert!(parse_config("experiment = cmj_alpha\nformat = xml\n", &[]).is_err());
    }

    #[test]
    fn override_flags() {
        let args: Vec<String> =
            ["--experiment", "cmj_alpha", "--config", "f.txt", "--mu-replicas=10", "--seed", "3"].map(String::from).to_vec();
        let (file, pairs) = parse_overrides(&args).unwrap();
        assert_eq!(file, Some(PathBuf::from("f.txt")));
        assert_eq!(pairs, ov(&[("experiment", "cmj_alpha"), ("mu_replicas", "10"), ("seed", "3")]));
        assert!(parse_overrides(&["--seed".to_string()]).is_err());
        assert!(parse_overrides(&["seed".to_string()]).is_err());
    }
}
