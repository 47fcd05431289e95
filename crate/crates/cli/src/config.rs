//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! lambda = 0.5
//! n = 3
//! m = 2, 3, 4
//! policy = replication, mds
//! seeds = 1, 2, 3
//! ```
//!
//! Command-line flags with the same names override file values.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use redundancy_core::meanfield::{DEFAULT_HORIZON, DEFAULT_STEP};
use redundancy_core::sim::{Policy, DEFAULT_HORIZON as DEFAULT_BATCHES, DEFAULT_K, DEFAULT_LAMBDA, DEFAULT_PROBE_RATE, DEFAULT_WARMUP};

use crate::error::{CliError, Result};

pub const KEYS: [&str; 14] = [
    "lambda", "n", "m", "d", "k", "policy", "removal", "horizon", "warmup", "probe_rate", "seeds", "t_max", "step",
    "out_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub lambda: f64,
    pub n: u32,
    pub m: Vec<u32>,
    pub d: u32,
    pub k: u32,
    pub policies: Vec<Policy>,
    pub removal: bool,
    pub horizon: u64,
    pub warmup: u64,
    pub probe_rate: f64,
    pub seeds: Vec<u64>,
    pub t_max: f64,
    pub step: f64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            n: 3,
            m: vec![3],
            d: 3,
            k: DEFAULT_K,
            policies: vec![Policy::Replication, Policy::Mds],
            removal: true,
            horizon: DEFAULT_BATCHES,
            warmup: DEFAULT_WARMUP,
            probe_rate: DEFAULT_PROBE_RATE,
            seeds: Vec::new(),
            t_max: DEFAULT_HORIZON,
            step: DEFAULT_STEP,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Flags shared by every experiment subcommand. Each mirrors a config key.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    /// One value or a comma-separated list.
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    /// `replication`, `mds`, or a comma-separated list of both.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub removal: Option<String>,
    /// Batch arrivals per simulation cell.
    #[arg(long)]
    pub horizon: Option<String>,
    #[arg(long)]
    pub warmup: Option<String>,
    #[arg(long)]
    pub probe_rate: Option<String>,
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub t_max: Option<String>,
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub out_dir: Option<String>,
}

impl ConfigArgs {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let fields = [
            ("lambda", &self.lambda),
            ("n", &self.n),
            ("m", &self.m),
            ("d", &self.d),
            ("k", &self.k),
            ("policy", &self.policy),
            ("removal", &self.removal),
            ("horizon", &self.horizon),
            ("warmup", &self.warmup),
            ("probe_rate", &self.probe_rate),
            ("seeds", &self.seeds),
            ("t_max", &self.t_max),
            ("step", &self.step),
            ("out_dir", &self.out_dir),
        ];
        fields
            .into_iter()
            .filter_map(|(key, value)| value.as_deref().map(|v| (key, v)))
            .collect()
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for (key, value) in self.pairs() {
            config.set(key, value)?;
        }
        config.check()?;
        Ok(config)
    }
}

fn bad(key: &str, reason: impl fmt::Display) -> CliError {
    CliError::Validation(format!("`{key}`: {reason}"))
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| bad(key, format!("cannot parse {value:?}: {e}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    let items = value
        .split(',')
        .map(|item| scalar(key, item))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(bad(key, "empty list"));
    }
    Ok(items)
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(bad(key, format!("expected true or false, got {other:?}"))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        text.parse()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lambda" => self.lambda = scalar(key, value)?,
            "n" => self.n = scalar(key, value)?,
            "m" => self.m = list(key, value)?,
            "d" => self.d = scalar(key, value)?,
            "k" => self.k = scalar(key, value)?,
            "policy" => self.policies = list(key, value)?,
            "removal" => self.removal = boolean(key, value)?,
            "horizon" => self.horizon = scalar(key, value)?,
            "warmup" => self.warmup = scalar(key, value)?,
            "probe_rate" => self.probe_rate = scalar(key, value)?,
            "seeds" if value.trim().is_empty() => self.seeds.clear(),
            "seeds" => self.seeds = list(key, value)?,
            "t_max" => self.t_max = scalar(key, value)?,
            "step" => self.step = scalar(key, value)?,
            "out_dir" => {
                let dir = value.trim();
                if dir.is_empty() {
                    return Err(bad(key, "empty path"));
                }
                self.out_dir = PathBuf::from(dir);
            }
            _ => return Err(bad(key, format!("unknown key; expected one of {}", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Checks that do not depend on which command runs. Model-level
    /// validation happens when parameter sets are built.
    pub fn check(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(bad("lambda", format!("must be positive and finite, got {}", self.lambda)));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(bad("t_max", format!("must be positive and finite, got {}", self.t_max)));
        }
        if !(self.step.is_finite() && self.step > 0.0 && self.step <= self.t_max) {
            return Err(bad("step", format!("must lie in (0, t_max], got {}", self.step)));
        }
        if (self.t_max / self.step).round() > 1e7 {
            return Err(bad("step", "grid would exceed 10^7 points"));
        }
        if (1..self.policies.len()).any(|i| self.policies[..i].contains(&self.policies[i])) {
            return Err(bad("policy", "listed twice"));
        }
        Ok(())
    }

    /// `key = value` lines in key order, for manifests.
    pub fn to_lines(&self) -> Vec<(String, String)> {
        let join = |items: Vec<String>| items.join(",");
        vec![
            ("lambda".into(), self.lambda.to_string()),
            ("n".into(), self.n.to_string()),
            ("m".into(), join(self.m.iter().map(u32::to_string).collect())),
            ("d".into(), self.d.to_string()),
            ("k".into(), self.k.to_string()),
            ("policy".into(), join(self.policies.iter().map(Policy::to_string).collect())),
            ("removal".into(), self.removal.to_string()),
            ("horizon".into(), self.horizon.to_string()),
            ("warmup".into(), self.warmup.to_string()),
            ("probe_rate".into(), self.probe_rate.to_string()),
            ("seeds".into(), join(self.seeds.iter().map(u64::to_string).collect())),
            ("t_max".into(), self.t_max.to_string()),
            ("step".into(), self.step.to_string()),
            ("out_dir".into(), self.out_dir.display().to_string()),
        ]
    }
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1)))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(bad(key, format!("set twice (line {})", lineno + 1)));
            }
            seen.push(key);
            config.set(key, value)?;
        }
        config.check()?;
        Ok(config)
    }
}
