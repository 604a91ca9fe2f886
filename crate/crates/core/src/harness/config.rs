//! Flat `key=value` experiment configuration.
//!
//! A config file holds one `key=value` per line (`#` starts a comment).
//! Command-line flags use the same keys and are applied after the file.
//! Grid-valued keys take either a comma list (`0.1,0.5,0.9`) or an
//! inclusive range `start:end:step`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::analytics::{
    SystemParams, DEFAULT_K, DEFAULT_T_COMMIT, DEFAULT_T_CPU, DEFAULT_T_INST, DEFAULT_T_TRAN,
};
use crate::engine::{Strategy, StrategyConfig, DEFAULT_MAX_RETRIES};
use crate::protocol::{ConflictMode, SignatureConfig, SignatureMode};
use crate::workload::{TraceGen, DEFAULT_WRITE_RATIO};

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_MEAN_ERROR_PCT: f64 = 5.0;
pub const DEFAULT_MAX_ERROR_PCT: f64 = 8.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config key `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("{path}:{line}: expected `key=value`")]
    Syntax { path: String, line: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn invalid(key: &str, msg: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, ConfigError::Io { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format `{s}` (csv, json)")),
        }
    }
}

/// Everything a sweep needs: grids, scalar settings and output location.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub strategies: Vec<Strategy>,
    pub f_nmp: Vec<f64>,
    pub f_cpu: f64,
    pub granularity: Vec<u64>,
    pub breakpoints: Vec<u32>,
    pub k: u64,
    pub trials: usize,
    pub seed: u64,
    /// Explicit seed list; replaces `seed`/`trials` when present.
    pub seeds: Option<Vec<u64>>,
    pub t_inst: f64,
    pub t_tran: f64,
    pub t_commit: f64,
    pub t_cpu: f64,
    pub signature: SignatureConfig,
    pub conflict_mode: ConflictMode,
    pub max_retries: u32,
    pub slot_gap_cycles: f64,
    pub fine_grained_access_cost: Option<f64>,
    pub write_ratio: f64,
    pub mean_error_pct: f64,
    pub max_error_pct: f64,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
}

/// `0.1, 0.2, ..., 0.9`.
pub fn default_f_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            strategies: vec![Strategy::Conda, Strategy::Mrcn],
            f_nmp: default_f_grid(),
            f_cpu: 0.5,
            granularity: vec![100, 500],
            breakpoints: vec![5],
            k: DEFAULT_K,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            seeds: None,
            t_inst: DEFAULT_T_INST,
            t_tran: DEFAULT_T_TRAN,
            t_commit: DEFAULT_T_COMMIT,
            t_cpu: DEFAULT_T_CPU,
            signature: SignatureConfig::default(),
            conflict_mode: ConflictMode::AddressOverlap,
            max_retries: DEFAULT_MAX_RETRIES,
            slot_gap_cycles: 0.0,
            fine_grained_access_cost: None,
            write_ratio: DEFAULT_WRITE_RATIO,
            mean_error_pct: DEFAULT_MEAN_ERROR_PCT,
            max_error_pct: DEFAULT_MAX_ERROR_PCT,
            out: None,
            format: ReportFormat::Csv,
        }
    }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError::invalid(key, format!("cannot parse `{value}`")))
}

fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn float_grid(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = value.split(':').collect();
    let grid = match parts.as_slice() {
        [single] => single
            .split(',')
            .map(|v| scalar::<f64>(key, v))
            .collect::<Result<Vec<_>, _>>()?,
        [start, end, step] => {
            let (start, end, step) = (
                scalar::<f64>(key, start)?,
                scalar::<f64>(key, end)?,
                scalar::<f64>(key, step)?,
            );
            if step.is_nan() || step <= 0.0 || end < start {
                return Err(ConfigError::invalid(key, "range needs start <= end and step > 0"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| snap(start + i as f64 * step)).collect()
        }
        _ => return Err(ConfigError::invalid(key, "expected a list or start:end:step")),
    };
    if grid.is_empty() {
        return Err(ConfigError::invalid(key, "grid is empty"));
    }
    Ok(grid)
}

fn int_grid<T: FromStr + TryFrom<u64>>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    let parts: Vec<&str> = value.split(':').collect();
    let raw: Vec<u64> = match parts.as_slice() {
        [single] => single
            .split(',')
            .map(|v| scalar::<u64>(key, v))
            .collect::<Result<_, _>>()?,
        [start, end, step] => {
            let (start, end, step) = (
                scalar::<u64>(key, start)?,
                scalar::<u64>(key, end)?,
                scalar::<u64>(key, step)?,
            );
            if step == 0 || end < start {
                return Err(ConfigError::invalid(key, "range needs start <= end and step > 0"));
            }
            (start..=end).step_by(step as usize).collect()
        }
        _ => return Err(ConfigError::invalid(key, "expected a list or start:end:step")),
    };
    raw.into_iter()
        .map(|v| T::try_from(v).map_err(|_| ConfigError::invalid(key, format!("{v} out of range"))))
        .collect()
}

pub const KEYS: &[&str] = &[
    "strategy",
    "f_nmp",
    "f_cpu",
    "granularity",
    "breakpoints",
    "k",
    "trials",
    "seed",
    "seeds",
    "timing.t_inst",
    "timing.t_tran",
    "timing.t_commit",
    "timing.t_cpu",
    "sig.mode",
    "sig.bits_per_elem",
    "sig.hashes",
    "engine.conflict_mode",
    "engine.max_retries",
    "engine.slot_gap_cycles",
    "engine.fine_grained_access_cost",
    "workload.write_ratio",
    "threshold.mean_error_pct",
    "threshold.max_error_pct",
    "out",
    "format",
];

impl ExperimentSpec {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "strategy" => {
                self.strategies = value
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|e: String| ConfigError::invalid(key, e)))
                    .collect::<Result<_, _>>()?
            }
            "f_nmp" => self.f_nmp = float_grid(key, value)?,
            "f_cpu" => self.f_cpu = scalar(key, value)?,
            "granularity" => self.granularity = int_grid(key, value)?,
            "breakpoints" => self.breakpoints = int_grid(key, value)?,
            "k" => self.k = scalar(key, value)?,
            "trials" => self.trials = scalar(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "seeds" => self.seeds = Some(int_grid(key, value)?),
            "timing.t_inst" => self.t_inst = scalar(key, value)?,
            "timing.t_tran" => self.t_tran = scalar(key, value)?,
            "timing.t_commit" => self.t_commit = scalar(key, value)?,
            "timing.t_cpu" => self.t_cpu = scalar(key, value)?,
            "sig.mode" => {
                self.signature.mode = value
                    .parse::<SignatureMode>()
                    .map_err(|e| ConfigError::invalid(key, e))?
            }
            "sig.bits_per_elem" => self.signature.bits_per_elem = scalar(key, value)?,
            "sig.hashes" => self.signature.hashes = scalar(key, value)?,
            "engine.conflict_mode" => {
                self.conflict_mode = value.parse().map_err(|e| ConfigError::invalid(key, e))?
            }
            "engine.max_retries" => self.max_retries = scalar(key, value)?,
            "engine.slot_gap_cycles" => self.slot_gap_cycles = scalar(key, value)?,
            "engine.fine_grained_access_cost" => {
                self.fine_grained_access_cost = Some(scalar(key, value)?)
            }
            "workload.write_ratio" => self.write_ratio = scalar(key, value)?,
            "threshold.mean_error_pct" => self.mean_error_pct = scalar(key, value)?,
            "threshold.max_error_pct" => self.max_error_pct = scalar(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse().map_err(|e| ConfigError::invalid(key, e))?,
            _ => {
                return Err(ConfigError::invalid(
                    key,
                    format!("unknown key; known keys: {}", KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    /// Apply `key=value` lines from `text`; `origin` names the source in errors.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: origin.to_string(),
                line: idx + 1,
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Whitespace- or newline-separated seeds.
    pub fn apply_seed_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let seeds = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .map(|s| scalar::<u64>("seeds", s))
            .collect::<Result<Vec<_>, _>>()?;
        if seeds.is_empty() {
            return Err(ConfigError::invalid("seeds", format!("{} holds no seeds", path.display())));
        }
        self.seeds = Some(seeds);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let nonempty = |key: &str, len: usize| {
            if len == 0 {
                Err(ConfigError::invalid(key, "grid is empty"))
            } else {
                Ok(())
            }
        };
        nonempty("strategy", self.strategies.len())?;
        nonempty("f_nmp", self.f_nmp.len())?;
        nonempty("granularity", self.granularity.len())?;
        nonempty("breakpoints", self.breakpoints.len())?;
        if self.seed_list().is_empty() {
            return Err(ConfigError::invalid("trials", "need at least one trial"));
        }
        for &f in &self.f_nmp {
            self.params(f)
                .map_err(|e| ConfigError::invalid("f_nmp", e.to_string()))?;
        }
        if let Some(&g) = self.granularity.iter().find(|&&g| g == 0) {
            return Err(ConfigError::invalid("granularity", format!("{g} must be >= 1")));
        }
        if self.breakpoints.contains(&0) {
            return Err(ConfigError::invalid("breakpoints", "must be >= 1"));
        }
        let bpe = self.signature.bits_per_elem;
        if bpe.is_nan() || bpe <= 0.0 || self.signature.hashes == 0 {
            return Err(ConfigError::invalid("sig", "bits_per_elem and hashes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.write_ratio) {
            return Err(ConfigError::invalid("workload.write_ratio", "must be in [0, 1]"));
        }
        self.strategy_config(Strategy::Conda, 1)
            .validate()
            .map_err(|e| ConfigError::invalid("engine", e.to_string()))?;
        Ok(())
    }

    pub fn params(&self, f_nmp: f64) -> Result<SystemParams, crate::analytics::ModelError> {
        SystemParams {
            k: self.k,
            f_cpu: self.f_cpu,
            f_nmp,
            t_inst: self.t_inst,
            t_tran: self.t_tran,
            t_commit: self.t_commit,
            t_cpu: self.t_cpu,
        }
        .validated()
    }

    pub fn strategy_config(&self, strategy: Strategy, b: u32) -> StrategyConfig {
        StrategyConfig {
            strategy,
            breakpoints: Some(b),
            conflict_mode: self.conflict_mode,
            signature: self.signature,
            fine_grained_access_cost: self.fine_grained_access_cost,
            max_retries: self.max_retries,
            slot_gap_cycles: self.slot_gap_cycles,
            trace_gen: TraceGen {
                write_ratio: self.write_ratio,
            },
        }
    }

    /// Seeds for every cell; the same list is used for every strategy so
    /// comparisons are paired.
    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.trials as u64)
                .map(|t| self.seed.wrapping_add(t))
                .collect(),
        }
    }

    /// One-line summary of every scalar setting, for report headers.
    pub fn provenance(&self) -> String {
        let seeds = match &self.seeds {
            Some(s) => format!("seeds={}", s.len()),
            None => format!("seed={} trials={}", self.seed, self.trials),
        };
        format!(
            "K={} f_cpu={} t_inst={} t_tran={} t_commit={} t_cpu={} sig.mode={} \
             sig.bits_per_elem={} sig.hashes={} conflict_mode={} max_retries={} \
             slot_gap_cycles={} fine_grained_access_cost={} write_ratio={} {}",
            self.k,
            self.f_cpu,
            self.t_inst,
            self.t_tran,
            self.t_commit,
            self.t_cpu,
            self.signature.mode,
            self.signature.bits_per_elem,
            self.signature.hashes,
            self.conflict_mode,
            self.max_retries,
            self.slot_gap_cycles,
            self.fine_grained_access_cost
                .map_or_else(|| format!("t_tran({})", self.t_tran), |c| c.to_string()),
            self.write_ratio,
            seeds,
        )
    }
}
