//! `key = value` configuration files. Keys are the long CLI flag names
//! without the dashes; `#` starts a comment.

use super::{DetectorKind, SimConfig};
use crate::detector::RadiusMode;
use crate::model::ConstellationKind;
use crate::{Error, Result};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// A simulation configuration with every field optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub users: Option<usize>,
    pub antennas: Option<usize>,
    pub coherence: Option<usize>,
    pub constellation: Option<ConstellationKind>,
    pub snr: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub detector: Option<DetectorKind>,
    pub radius_mode: Option<RadiusMode>,
    pub radius_c: Option<f64>,
    pub mmse_iters: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub no_timing: Option<bool>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

/// Parses a comma-separated list of SNRs in dB.
pub fn parse_snr_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse("snr", v))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value '{value}' for '{key}'"
        ))),
    }
}

pub fn parse_config_str(text: &str) -> Result<PartialConfig> {
    let mut cfg = PartialConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        match key.as_str() {
            "users" => cfg.users = Some(parse(&key, value)?),
            "antennas" => cfg.antennas = Some(parse(&key, value)?),
            "coherence" => cfg.coherence = Some(parse(&key, value)?),
            "constellation" => cfg.constellation = Some(value.parse()?),
            "snr" => cfg.snr = Some(parse_snr_list(value)?),
            "trials" => cfg.trials = Some(parse(&key, value)?),
            "detector" => cfg.detector = Some(value.parse()?),
            "radius-mode" => cfg.radius_mode = Some(value.parse()?),
            "radius-c" => cfg.radius_c = Some(parse(&key, value)?),
            "mmse-iters" => cfg.mmse_iters = Some(parse(&key, value)?),
            "seed" => cfg.seed = Some(parse(&key, value)?),
            "workers" => cfg.workers = Some(parse(&key, value)?),
            "out" => cfg.out = Some(PathBuf::from(value)),
            "no-timing" => cfg.no_timing = Some(parse_bool(&key, value)?),
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )));
            }
        }
    }
    Ok(cfg)
}

pub fn read_config_file(path: &Path) -> Result<PartialConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

impl PartialConfig {
    /// Fields set in `self` win over those in `lower`.
    pub fn or(self, lower: PartialConfig) -> PartialConfig {
        PartialConfig {
            users: self.users.or(lower.users),
            antennas: self.antennas.or(lower.antennas),
            coherence: self.coherence.or(lower.coherence),
            constellation: self.constellation.or(lower.constellation),
            snr: self.snr.or(lower.snr),
            trials: self.trials.or(lower.trials),
            detector: self.detector.or(lower.detector),
            radius_mode: self.radius_mode.or(lower.radius_mode),
            radius_c: self.radius_c.or(lower.radius_c),
            mmse_iters: self.mmse_iters.or(lower.mmse_iters),
            seed: self.seed.or(lower.seed),
            workers: self.workers.or(lower.workers),
            out: self.out.or(lower.out),
            no_timing: self.no_timing.or(lower.no_timing),
        }
    }

    /// Fills unset fields with defaults and validates the result.
    pub fn resolve(self) -> Result<SimConfig> {
        let d = SimConfig::default();
        let cfg = SimConfig {
            n: self.antennas.unwrap_or(d.n),
            m: self.users.unwrap_or(d.m),
            t: self.coherence.unwrap_or(d.t),
            constellation: self.constellation.unwrap_or(d.constellation),
            snr_db: self.snr.unwrap_or(d.snr_db),
            trials: self.trials.unwrap_or(d.trials),
            detector: self.detector.unwrap_or(d.detector),
            radius_mode: self.radius_mode.unwrap_or(d.radius_mode),
            radius_c: self.radius_c.or(d.radius_c),
            mmse_iters: self.mmse_iters.unwrap_or(d.mmse_iters),
            master_seed: self.seed.unwrap_or(d.master_seed),
            workers: self.workers.unwrap_or(d.workers),
            out: self.out.or(d.out),
            record_timing: !self.no_timing.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
