//! Run configuration: flags override a flat `key = value` file, which overrides defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("format must be csv or json (got {other:?})")),
        }
    }
}

/// Flags shared by every subcommand. All optional so the config file can fill gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat `key = value` file; keys are the flag names without dashes.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub k1: Option<f64>,
    #[arg(long, global = true)]
    pub k2: Option<f64>,
    #[arg(long, global = true)]
    pub m1: Option<f64>,
    #[arg(long, global = true)]
    pub m2: Option<f64>,
    /// Anisotropy ratio of the loading, in [0, 1].
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub r_min: Option<f64>,
    #[arg(long, global = true)]
    pub r_max: Option<f64>,
    #[arg(long, global = true)]
    pub m1_min: Option<f64>,
    #[arg(long, global = true)]
    pub m1_max: Option<f64>,
    /// Grid points per swept axis.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Compare against the brute-force oracle.
    #[arg(long, global = true)]
    pub oracle: bool,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k1: f64,
    pub k2: f64,
    pub m1: f64,
    pub m2: f64,
    pub r: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub m1_min: f64,
    pub m1_max: f64,
    /// Unset means the subcommand's own default.
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub oracle: bool,
    pub jobs: usize,
    pub seed: u64,
}

const KEYS: [&str; 15] = [
    "k1", "k2", "m1", "m2", "r", "r_min", "r_max", "m1_min", "m1_max", "steps", "out", "format",
    "oracle", "jobs", "seed",
];

/// Parses `key = value` lines. `#` starts a comment; `-` and `_` are interchangeable in keys.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Input(format!("config line {}: expected key = value", i + 1))
        })?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Input(format!(
                "config line {}: unknown key {key:?}",
                i + 1
            )));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_file(&text)
}

fn from_file<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    file.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| CliError::Input(format!("config key {key}: {e}")))
        })
        .transpose()
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("expected a boolean (got {v:?})")),
    }
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        macro_rules! pick {
            ($field:ident, $default:expr) => {
                match flags.$field {
                    Some(v) => v,
                    None => from_file(&file, stringify!($field))?.unwrap_or($default),
                }
            };
        }
        let m2 = pick!(m2, 0.5);
        let oracle = flags.oracle
            || file
                .get("oracle")
                .map(|v| {
                    parse_bool(v).map_err(|e| CliError::Input(format!("config key oracle: {e}")))
                })
                .transpose()?
                .unwrap_or(false);
        let cfg = RunConfig {
            k1: pick!(k1, 1.0),
            k2: pick!(k2, 3.0),
            m1: pick!(m1, 0.2),
            m2,
            r: pick!(r, 0.5),
            r_min: pick!(r_min, 0.01),
            r_max: pick!(r_max, 1.0),
            m1_min: pick!(m1_min, 0.01),
            m1_max: pick!(m1_max, 0.99 * (1.0 - m2)),
            steps: match flags.steps {
                Some(v) => Some(v),
                None => from_file(&file, "steps")?,
            },
            out: flags
                .out
                .clone()
                .or_else(|| file.get("out").map(PathBuf::from)),
            format: match flags.format {
                Some(f) => Some(f),
                None => from_file(&file, "format")?,
            },
            oracle,
            jobs: pick!(jobs, 0),
            seed: pick!(seed, 0),
        };
        Ok(cfg)
    }

    pub fn check_r_range(&self) -> Result<(), CliError> {
        let (lo, hi) = (self.r_min, self.r_max);
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(CliError::Input(format!(
                "need 0 < r-min <= r-max <= 1 (got r-min = {lo}, r-max = {hi})"
            )));
        }
        self.check_steps()
    }

    pub fn check_m1_range(&self) -> Result<(), CliError> {
        let (lo, hi, cap) = (self.m1_min, self.m1_max, 1.0 - self.m2);
        if !(lo > 0.0 && lo <= hi && hi < cap) {
            return Err(CliError::Input(format!(
                "need 0 < m1-min <= m1-max < 1 - m2 = {cap} (got m1-min = {lo}, m1-max = {hi})"
            )));
        }
        self.check_steps()
    }

    pub fn steps_or(&self, default: usize) -> usize {
        self.steps.unwrap_or(default)
    }

    pub fn check_steps(&self) -> Result<(), CliError> {
        if self.steps == Some(0) {
            return Err(CliError::Input("steps must be at least 1".into()));
        }
        Ok(())
    }
}
