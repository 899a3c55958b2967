//! Experiment config files.
//!
//! ```text
//! # comment
//! env = fast            # preset name, or a path to a t,arm1,...,armK CSV
//! arms = 4
//! horizon = 5000
//! runs = 1000
//! seed = 42
//! regret_mode = expected
//! out = results
//!
//! [policy]
//! policy = dts
//! gamma = 0.4
//! label = dTS-0.4
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::env::EnvPreset;
use crate::error::{Error, Result};
use crate::harness::{EnvSpec, ExperimentConfig};
use crate::policy::{PolicyKind, PolicySpec};

fn parse<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::config(format!("line {line}: invalid value '{value}' for '{key}'")))
}

/// Policy block collected before its name is known.
struct PendingPolicy {
    start: usize,
    name: Option<String>,
    pairs: Vec<(String, String, usize)>,
}

impl PendingPolicy {
    fn finish(self) -> Result<PolicySpec> {
        let name = self
            .name
            .ok_or_else(|| Error::config(format!("line {}: [policy] block without 'policy = <name>'", self.start)))?;
        let mut spec = PolicySpec::new(name.parse::<PolicyKind>()?);
        for (key, value, line) in self.pairs {
            spec.set(&key, &value).map_err(|e| match e {
                Error::Config(m) => Error::config(format!("line {line}: {m}")),
                other => other,
            })?;
        }
        Ok(spec)
    }
}

fn env_spec(value: &str, base: Option<&Path>) -> EnvSpec {
    match value.parse::<EnvPreset>() {
        Ok(p) => EnvSpec::Preset(p),
        Err(_) => EnvSpec::Csv(resolve(value, base)),
    }
}

fn resolve(value: &str, base: Option<&Path>) -> PathBuf {
    let p = PathBuf::from(value);
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

/// Parses config text; `base` anchors relative paths.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<ExperimentConfig> {
    let mut env = None;
    let mut config = ExperimentConfig::new(EnvSpec::Preset(EnvPreset::Fast));
    let mut current: Option<PendingPolicy> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.eq_ignore_ascii_case("[policy]") {
                return Err(Error::config(format!("line {line_no}: unknown section {line}")));
            }
            if let Some(p) = current.take() {
                config.policies.push(p.finish()?);
            }
            current = Some(PendingPolicy { start: line_no, name: None, pairs: Vec::new() });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(format!("line {line_no}: expected 'key = value'")));
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();

        if let Some(p) = current.as_mut() {
            if key == "policy" || key == "name" {
                p.name = Some(value.to_owned());
            } else {
                p.pairs.push((key, value.to_owned(), line_no));
            }
            continue;
        }
        match key.as_str() {
            "env" => env = Some(env_spec(value, base)),
            "arms" => config.arms = parse(&key, value, line_no)?,
            "horizon" => config.horizon = parse(&key, value, line_no)?,
            "runs" => config.runs = parse(&key, value, line_no)?,
            "seed" => config.seed = parse(&key, value, line_no)?,
            "regret_mode" => config.regret_mode = value.parse()?,
            "out" => config.out = Some(resolve(value, base)),
            other => return Err(Error::config(format!("line {line_no}: unknown key '{other}'"))),
        }
    }
    if let Some(p) = current.take() {
        config.policies.push(p.finish()?);
    }
    config.env = env.ok_or_else(|| Error::config("config does not set 'env'"))?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.parent()).map_err(|e| match e {
        Error::Config(message) => Error::Parse { path: path.to_owned(), message },
        other => other,
    })
}
