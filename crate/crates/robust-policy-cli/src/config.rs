//! Experiment configuration: a flat sectioned key/value file.
//!
//! Grammar: `[section]` headers, `key = value` lines, `#` comments, blank
//! lines ignored. Recognized sections: `experiment`, `data`, `training`.
//! Lists are comma-separated. Unknown keys are errors so typos fail fast.
//!
//! ```text
//! [experiment]
//! kind = toy                 # toy | highdim | voting
//! objective = maxmin         # maxmin | gain
//! baseline = always_control  # gain only: always_control | always_treat | x1_rule
//! gamma = 1, 2, 3, 4
//! p_target = 0.1, 0.2, 0.5, 0.7, 0.9
//! seeds = 0, 1, 2, 3, 4, 5
//!
//! [data]
//! n_train = 20000
//! n_val = 10000
//! n_test = 10000
//! p_study = 0.2
//! e = 0.5
//! voting_csv = data/voting.csv   # voting only
//! column_map = docs/columns.txt  # optional schema override
//!
//! [training]
//! epochs_max = 50
//! batch_size = 4000
//! learning_rate = 0.01
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use robust_policy::ru::{BaselineSpec, Objective};

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field '{}': {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Toy,
    HighDim,
    Voting,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Toy => "toy",
            ExperimentKind::HighDim => "highdim",
            ExperimentKind::Voting => "voting",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub objective: Objective,
    pub gammas: Vec<f64>,
    pub p_targets: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub p_study: f64,
    pub e: f64,
    pub voting_csv: Option<PathBuf>,
    pub column_map: Option<PathBuf>,
    pub epochs_max: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// The exact text the config was built from, hashed into the manifest.
    pub source: String,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                current = line[1..line.len() - 1].trim().to_string();
                if !["experiment", "data", "training"].contains(&current.as_str()) {
                    return Err(err(&current, "unknown section"));
                }
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("config", format!("line {} is not key = value", lineno + 1)))?;
            if current.is_empty() {
                return Err(err(k.trim(), "key outside any [section]"));
            }
            sections
                .get_mut(&current)
                .unwrap()
                .insert(k.trim().to_string(), v.trim().to_string());
        }

        let experiment = sections.get("experiment").cloned().unwrap_or_default();
        let data = sections.get("data").cloned().unwrap_or_default();
        let training = sections.get("training").cloned().unwrap_or_default();

        let allowed_experiment = ["kind", "objective", "baseline", "gamma", "p_target", "seeds"];
        for k in experiment.keys() {
            if !allowed_experiment.contains(&k.as_str()) {
                return Err(err(k, "unknown key in [experiment]"));
            }
        }
        let allowed_data =
            ["n_train", "n_val", "n_test", "p_study", "e", "voting_csv", "column_map"];
        for k in data.keys() {
            if !allowed_data.contains(&k.as_str()) {
                return Err(err(k, "unknown key in [data]"));
            }
        }
        let allowed_training = ["epochs_max", "batch_size", "learning_rate"];
        for k in training.keys() {
            if !allowed_training.contains(&k.as_str()) {
                return Err(err(k, "unknown key in [training]"));
            }
        }

        let kind = match experiment.get("kind").map(String::as_str) {
            Some("toy") | None => ExperimentKind::Toy,
            Some("highdim") => ExperimentKind::HighDim,
            Some("voting") => ExperimentKind::Voting,
            Some(other) => return Err(err("kind", format!("unknown experiment '{other}'"))),
        };

        let objective = match experiment.get("objective").map(String::as_str) {
            Some("maxmin") | None => Objective::MaxMin,
            Some("gain") => {
                let baseline = match experiment.get("baseline").map(String::as_str) {
                    Some("always_control") | None => BaselineSpec::AlwaysControl,
                    Some("always_treat") => BaselineSpec::AlwaysTreat,
                    Some("x1_rule") => BaselineSpec::FirstCovariateNonpositive,
                    Some(other) => return Err(err("baseline", format!("unknown baseline '{other}'"))),
                };
                Objective::Gain(baseline)
            }
            Some(other) => return Err(err("objective", format!("unknown objective '{other}'"))),
        };
        if matches!(objective, Objective::MaxMin) && experiment.contains_key("baseline") {
            return Err(err("baseline", "only meaningful for objective = gain"));
        }

        let gammas = parse_list(experiment.get("gamma"), "gamma", &[1.0, 2.0, 3.0, 4.0])?;
        for g in &gammas {
            if !g.is_finite() || *g < 1.0 {
                return Err(err("gamma", format!("every Γ must be >= 1, got {g}")));
            }
        }
        let p_targets =
            parse_list(experiment.get("p_target"), "p_target", &[0.1, 0.2, 0.5, 0.7, 0.9])?;
        for p in &p_targets {
            if !(0.0..=1.0).contains(p) {
                return Err(err("p_target", format!("targets must lie in [0,1], got {p}")));
            }
        }
        let seeds: Vec<u64> = match experiment.get("seeds") {
            None => (0..6).collect(),
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| err("seeds", format!("bad seed '{t}'"))))
                .collect::<Result<_, _>>()?,
        };
        if seeds.is_empty() {
            return Err(err("seeds", "need at least one seed"));
        }

        let n_train = parse_num(data.get("n_train"), "n_train", 20_000)?;
        let n_val = parse_num(data.get("n_val"), "n_val", 10_000)?;
        let n_test = parse_num(data.get("n_test"), "n_test", 10_000)?;
        let p_study = parse_f64(data.get("p_study"), "p_study", 0.2)?;
        if !(0.0..=1.0).contains(&p_study) {
            return Err(err("p_study", "must lie in [0,1]"));
        }
        let default_e = match kind {
            ExperimentKind::Voting => 1.0 / 6.0,
            _ => 0.5,
        };
        let e = parse_f64(data.get("e"), "e", default_e)?;
        if !(e > 0.0 && e < 1.0) {
            return Err(err("e", "treatment probability must lie in (0,1)"));
        }
        let voting_csv = data.get("voting_csv").map(PathBuf::from);
        let column_map = data.get("column_map").map(PathBuf::from);
        if kind == ExperimentKind::Voting && voting_csv.is_none() {
            return Err(err("voting_csv", "required for the voting experiment"));
        }

        let epochs_max = parse_num(training.get("epochs_max"), "epochs_max", 50)?;
        let batch_size = parse_num(training.get("batch_size"), "batch_size", 4000)?;
        if batch_size == 0 {
            return Err(err("batch_size", "must be positive"));
        }
        let learning_rate = parse_f64(training.get("learning_rate"), "learning_rate", 1e-2)?;
        if learning_rate.is_nan() || learning_rate <= 0.0 {
            return Err(err("learning_rate", "must be positive"));
        }

        Ok(ExperimentConfig {
            kind,
            objective,
            gammas,
            p_targets,
            seeds,
            n_train,
            n_val,
            n_test,
            p_study,
            e,
            voting_csv,
            column_map,
            epochs_max,
            batch_size,
            learning_rate,
            source: text.to_string(),
        })
    }
}

fn parse_list(raw: Option<&String>, field: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
    match raw {
        None => Ok(default.to_vec()),
        Some(s) => s
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| err(field, format!("bad number '{}'", t.trim())))
            })
            .collect(),
    }
}

fn parse_num(raw: Option<&String>, field: &str, default: usize) -> Result<usize, ConfigError> {
    match raw {
        None => Ok(default),
        Some(s) => s.parse().map_err(|_| err(field, format!("bad count '{s}'"))),
    }
}

fn parse_f64(raw: Option<&String>, field: &str, default: f64) -> Result<f64, ConfigError> {
    match raw {
        None => Ok(default),
        Some(s) => s.parse().map_err(|_| err(field, format!("bad number '{s}'"))),
    }
}
