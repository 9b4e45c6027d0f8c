//! Effective settings for one subcommand.
//!
//! Precedence, highest first: command-line flags, the `--config` file, the
//! preset, environment variables, built-in defaults. Keys are the long flag
//! names with `-` written as `_`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command, ValueEnum};

use crate::args::Preset;
use crate::UsageError;

/// Keys read by the neural trainer; accepted and passed through unchanged.
const PASS_THROUGH: &[&str] = &["learning_rate", "batch_size", "buffer_size", "target_update", "tau", "workers"];

const TABLE1: &[(&str, &str)] = &[
    ("rows", "5"),
    ("cols", "5"),
    ("dest", "24"),
    ("horizon", "30"),
    ("forbidden", "penalty"),
    ("penalty", "100"),
    ("alpha", "1e-4"),
    ("alpha_schedule", "constant"),
    ("gamma", "0.99"),
    ("epsilon_start", "1"),
    ("epsilon_schedule", "linear"),
    ("episodes", "20000000"),
    ("max_steps", "30"),
];

const TABLE3: &[(&str, &str)] = &[
    ("learning_rate", "1e-4"),
    ("gamma", "0.99"),
    ("epsilon_start", "1"),
    ("epsilon_schedule", "linear"),
    ("batch_size", "32"),
    ("buffer_size", "1000000"),
    ("target_update", "30000"),
    ("tau", "1e-3"),
    ("workers", "30"),
];

pub fn preset_values(preset: Preset) -> BTreeMap<String, String> {
    let table = match preset {
        Preset::Table1 => TABLE1,
        Preset::Table3 => TABLE3,
    };
    table.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

fn arg_keys(cmd: &Command) -> Vec<(String, String)> {
    cmd.get_arguments()
        .filter(|a| !a.is_positional())
        .filter_map(|a| a.get_long().map(|l| (a.get_id().to_string(), normalize(l))))
        .filter(|(id, _)| id != "help" && id != "version")
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str, root: &Command) -> Result<BTreeMap<String, String>, UsageError> {
    let known: Vec<String> = root
        .get_subcommands()
        .flat_map(|c| arg_keys(c).into_iter().map(|(_, k)| k))
        .chain(PASS_THROUGH.iter().map(|k| k.to_string()))
        .collect();
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = normalize(key);
        if !known.contains(&key) {
            return Err(UsageError(format!("config line {}: unknown key `{key}`", n + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn load_config(path: &Path, root: &Command) -> anyhow::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    Ok(parse_config(&text, root)?)
}

#[derive(Debug)]
pub struct Settings {
    command: String,
    values: BTreeMap<String, String>,
    extras: BTreeMap<String, String>,
}

impl Settings {
    pub fn resolve(
        cmd: &Command,
        matches: &ArgMatches,
        file: &BTreeMap<String, String>,
        preset: &BTreeMap<String, String>,
    ) -> Self {
        let mut values = BTreeMap::new();
        for (id, key) in arg_keys(cmd) {
            let raw = || {
                matches
                    .get_raw(&id)
                    .and_then(|mut v| v.next())
                    .map(|v| v.to_string_lossy().into_owned())
            };
            let value = match matches.value_source(&id) {
                Some(ValueSource::CommandLine) => raw(),
                source => file.get(&key).or_else(|| preset.get(&key)).cloned().or_else(|| {
                    matches!(source, Some(ValueSource::EnvVariable | ValueSource::DefaultValue))
                        .then(raw)
                        .flatten()
                }),
            };
            if let Some(v) = value {
                values.insert(key, v);
            }
        }
        let extras = PASS_THROUGH
            .iter()
            .filter_map(|k| file.get(*k).or_else(|| preset.get(*k)).map(|v| (k.to_string(), v.clone())))
            .collect();
        Self { command: cmd.get_name().to_string(), values, extras }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, UsageError> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| UsageError(format!("invalid value `{v}` for `{key}`"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, UsageError> {
        self.get(key)?
            .ok_or_else(|| UsageError(format!("`{}` needs `--{}`", self.command, key.replace('_', "-"))))
    }

    pub fn flag(&self, key: &str) -> Result<bool, UsageError> {
        match self.raw(key) {
            None => Ok(false),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(UsageError(format!("invalid value `{v}` for `{key}`, expected true or false"))),
            },
        }
    }

    pub fn choice<T: ValueEnum>(&self, key: &str) -> Result<T, UsageError> {
        let v: String = self.require(key)?;
        T::from_str(&v, true).map_err(|_| UsageError(format!("invalid value `{v}` for `{key}`")))
    }

    /// Config text that reproduces this run.
    pub fn dump(&self) -> String {
        let mut s = format!("# r2l {}\n", self.command);
        for (k, v) in self.values.iter().chain(&self.extras) {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
