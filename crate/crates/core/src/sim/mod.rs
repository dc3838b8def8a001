//! Monte Carlo harness: seeded blocks, detection, SER and complexity
//! statistics per SNR point.

mod config;
mod csv;

pub use config::{parse_config_str, parse_snr_list, read_config_file, PartialConfig};
pub use csv::{format_g, parse_csv, read_csv, render_csv, write_csv, CSV_HEADER};

use crate::baselines::{mmse_iterative, mmse_noniterative, DEFAULT_MAX_ITERS};
use crate::detector::{glrt_detect, DetectionResult, RadiusMode, RadiusPolicy, MAX_CHILDREN};
use crate::model::{
    derive_seed, generate_block, Constellation, ConstellationKind, TransmissionBlock,
};
use crate::oracle::{exhaustive_detect, hypothesis_count, MAX_HYPOTHESES};
use crate::{Error, Result};
use rayon::prelude::*;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Paper-mode radius constant used for noiseless blocks when none is given.
const NOISELESS_RADIUS_C: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Glrt,
    Exhaustive,
    Mmse,
    MmseIter,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Glrt => "glrt",
            Self::Exhaustive => "exhaustive",
            Self::Mmse => "mmse",
            Self::MmseIter => "mmse-iter",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "glrt" => Ok(Self::Glrt),
            "exhaustive" => Ok(Self::Exhaustive),
            "mmse" => Ok(Self::Mmse),
            "mmse-iter" | "mmse_iter" => Ok(Self::MmseIter),
            other => Err(Error::Config(format!("unknown detector '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub constellation: ConstellationKind,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub detector: DetectorKind,
    pub radius_mode: RadiusMode,
    /// Paper-mode constant; `None` picks `sigma^2 T` per SNR point.
    pub radius_c: Option<f64>,
    pub mmse_iters: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    /// When false the wall-time column is written as 0.
    pub record_timing: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 50,
            m: 2,
            t: 8,
            constellation: ConstellationKind::Qpsk,
            snr_db: vec![10.0],
            trials: 100,
            detector: DetectorKind::Glrt,
            radius_mode: RadiusMode::Paper,
            radius_c: None,
            mmse_iters: DEFAULT_MAX_ITERS,
            master_seed: 0,
            workers: default_workers(),
            out: None,
            record_timing: true,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.m == 0 {
            return fail(format!(
                "antennas ({}) and users ({}) must be positive",
                self.n, self.m
            ));
        }
        if self.m >= self.t {
            return fail(format!(
                "users ({}) must be fewer than coherence slots ({})",
                self.m, self.t
            ));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return fail("SNR list is empty".into());
        }
        if let Some(bad) = self
            .snr_db
            .iter()
            .find(|s| s.is_nan() || **s == f64::NEG_INFINITY)
        {
            return fail(format!("invalid SNR {bad}"));
        }
        if let Some(c) = self.radius_c {
            if !(c > 0.0 && c.is_finite()) {
                return fail(format!("radius constant must be positive, got {c}"));
            }
        }
        let con = Constellation::new(self.constellation);
        match self.detector {
            DetectorKind::Exhaustive => {
                let size = hypothesis_count(&con, self.m, self.t);
                if size > MAX_HYPOTHESES {
                    return Err(Error::SearchSpaceTooLarge {
                        size,
                        cap: MAX_HYPOTHESES,
                    });
                }
            }
            DetectorKind::Glrt => {
                if con.product_size(self.m).is_none_or(|c| c > MAX_CHILDREN) {
                    return Err(Error::SearchSpaceTooLarge {
                        size: (con.len() as u128).saturating_pow(self.m as u32),
                        cap: MAX_CHILDREN as u128,
                    });
                }
            }
            DetectorKind::Mmse | DetectorKind::MmseIter => {}
        }
        Ok(())
    }

    fn radius_policy(
        &self,
        block: &TransmissionBlock,
        con: &Constellation,
    ) -> Result<RadiusPolicy> {
        Ok(match self.radius_mode {
            RadiusMode::Paper => RadiusPolicy::Paper {
                c: self
                    .radius_c
                    .unwrap_or_else(|| default_radius_c(block.noise_var, self.t)),
            },
            RadiusMode::Warmstart => {
                let baseline = mmse_iterative(
                    &block.x,
                    &block.pilots(),
                    con,
                    block.noise_var,
                    self.mmse_iters,
                )?;
                RadiusPolicy::Warmstart {
                    baseline_metric: baseline.metric,
                }
            }
        })
    }
}

/// Default paper-mode constant, `sigma^2 T`.
pub fn default_radius_c(noise_var: f64, t: usize) -> f64 {
    let c = noise_var * t as f64;
    if c > 0.0 && c.is_finite() {
        c
    } else {
        NOISELESS_RADIUS_C
    }
}

/// Aggregated statistics for one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub snr_db: f64,
    pub ser: f64,
    pub avg_visited_nodes: f64,
    pub avg_radius_restarts: f64,
    pub avg_wall_ms: f64,
    pub trials: u64,
    pub symbol_errors: u64,
    pub symbols_total: u64,
}

/// Per-block outcome.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub symbol_errors: u64,
    pub result: DetectionResult,
}

/// Symbol errors over the data slots `M..T`.
pub fn count_symbol_errors(block: &TransmissionBlock, detected: &DetectionResult) -> u64 {
    let (m, t) = (block.n_users, block.coherence);
    let mut errors = 0;
    for j in m..t {
        for k in 0..m {
            if detected.s_detected[(k, j)] != block.s_true[(k, j)] {
                errors += 1;
            }
        }
    }
    errors
}

/// Runs the configured detector on one block.
pub fn detect_block(
    config: &SimConfig,
    con: &Constellation,
    block: &TransmissionBlock,
) -> Result<DetectionResult> {
    let pilots = block.pilots();
    match config.detector {
        DetectorKind::Glrt => {
            let policy = config.radius_policy(block, con)?;
            glrt_detect(&block.x, &pilots, con, policy)
        }
        DetectorKind::Exhaustive => exhaustive_detect(&block.x, &pilots, con),
        DetectorKind::Mmse => mmse_noniterative(&block.x, &pilots, con, block.noise_var),
        DetectorKind::MmseIter => {
            mmse_iterative(&block.x, &pilots, con, block.noise_var, config.mmse_iters)
        }
    }
}

/// Generates and detects trial `trial_index` of SNR point `snr_index`.
pub fn run_trial(config: &SimConfig, snr_index: usize, trial_index: usize) -> Result<TrialOutcome> {
    let con = Constellation::new(config.constellation);
    let seed = derive_seed(config.master_seed, snr_index as u64, trial_index as u64);
    let block = generate_block(
        config.n,
        config.m,
        config.t,
        &con,
        config.snr_db[snr_index],
        seed,
    )?;
    let start = std::time::Instant::now();
    let mut result = detect_block(config, &con, &block)?;
    // Includes the warm-start baseline when there is one.
    result.wall_time = start.elapsed();
    Ok(TrialOutcome {
        symbol_errors: count_symbol_errors(&block, &result),
        result,
    })
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// All trials of one SNR point, in trial order.
pub fn run_point_outcomes(config: &SimConfig, snr_index: usize) -> Result<Vec<TrialOutcome>> {
    config.validate()?;
    let pool = thread_pool(config.workers)?;
    pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|k| run_trial(config, snr_index, k))
            .collect()
    })
}

/// Aggregates trial outcomes in trial order.
pub fn aggregate(config: &SimConfig, snr_db: f64, outcomes: &[TrialOutcome]) -> SimRecord {
    let trials = outcomes.len() as u64;
    let symbols_total = trials * (config.m * (config.t - config.m)) as u64;
    let symbol_errors: u64 = outcomes.iter().map(|o| o.symbol_errors).sum();
    let visited: u64 = outcomes.iter().map(|o| o.result.visited_nodes).sum();
    let restarts: u64 = outcomes
        .iter()
        .map(|o| u64::from(o.result.radius_restarts))
        .sum();
    let wall_ms: f64 = if config.record_timing {
        outcomes
            .iter()
            .map(|o| o.result.wall_time.as_secs_f64() * 1e3)
            .sum()
    } else {
        0.0
    };
    let denom = trials.max(1) as f64;
    SimRecord {
        snr_db,
        ser: if symbols_total == 0 {
            0.0
        } else {
            symbol_errors as f64 / symbols_total as f64
        },
        avg_visited_nodes: visited as f64 / denom,
        avg_radius_restarts: restarts as f64 / denom,
        avg_wall_ms: wall_ms / denom,
        trials,
        symbol_errors,
        symbols_total,
    }
}

pub fn run_point(config: &SimConfig, snr_index: usize) -> Result<SimRecord> {
    let outcomes = run_point_outcomes(config, snr_index)?;
    Ok(aggregate(config, config.snr_db[snr_index], &outcomes))
}

/// One record per SNR point, in the order of `config.snr_db`.
pub fn run_sweep(config: &SimConfig) -> Result<Vec<SimRecord>> {
    config.validate()?;
    (0..config.snr_db.len())
        .map(|i| run_point(config, i))
        .collect()
}
