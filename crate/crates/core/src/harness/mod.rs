//! Experiment driver: configuration, parameter sweeps, analytic validation,
//! strategy comparison and report output.

mod config;
mod report;
mod sweep;

use std::fs;
use std::path::Path;

use thiserror::Error;

pub use config::{default_f_grid, ConfigError, ExperimentSpec, ReportFormat, KEYS};
pub use report::{emit_report, write_rows};
pub use sweep::{
    cells, compare_rows, compare_strategies, error_pct, fine_grained_expected, run_cell, run_cells,
    run_sweep, sweep_rows, validate_analytics, validation_rows, Cell, CellResult, CompareRow,
    SweepRow, ValidationRow,
};

use crate::analytics::ModelError;
use crate::engine::{EngineError, Strategy};
use crate::protocol::SignatureMode;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn is_io(&self) -> bool {
        match self {
            HarnessError::Io { .. } => true,
            HarnessError::Config(c) => c.is_io(),
            HarnessError::Csv(e) => e.is_io_error(),
            HarnessError::Json(e) => e.is_io(),
            _ => false,
        }
    }
}

/// Grids used by `reproduce`.
pub const VALIDATION_GRANULARITY: [u64; 2] = [100, 500];
pub const VALIDATION_BREAKPOINTS: [u32; 2] = [1, 5];
pub const STUDY_GRANULARITY: [u64; 5] = [50, 100, 250, 500, 1000];
pub const STUDY_F_NMP: [f64; 2] = [0.1, 0.9];
pub const STUDY_BREAKPOINTS: u32 = 5;

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub validation: Vec<ValidationRow>,
    pub compare: Vec<CompareRow>,
    pub granularity: Vec<SweepRow>,
}

impl Reproduction {
    pub fn validated(&self) -> bool {
        self.validation.iter().all(|v| v.pass)
    }
}

/// The validation and comparison grid: CONDA and MRCN at both
/// granularities, the default f_nmp grid, one and five breakpoints.
pub fn validation_spec(base: &ExperimentSpec) -> ExperimentSpec {
    let mut spec = base.clone();
    spec.strategies = vec![Strategy::Conda, Strategy::Mrcn];
    spec.granularity = VALIDATION_GRANULARITY.to_vec();
    spec.breakpoints = VALIDATION_BREAKPOINTS.to_vec();
    spec.f_nmp = default_f_grid();
    spec.signature.mode = SignatureMode::ExactSet;
    spec
}

pub fn granularity_spec(base: &ExperimentSpec) -> ExperimentSpec {
    let mut spec = base.clone();
    spec.strategies = vec![Strategy::FineGrained, Strategy::Conda, Strategy::Mrcn];
    spec.granularity = STUDY_GRANULARITY.to_vec();
    spec.breakpoints = vec![STUDY_BREAKPOINTS];
    spec.f_nmp = STUDY_F_NMP.to_vec();
    spec
}

/// Validation, comparison and granularity study on `base`'s scalar
/// settings. Comparison rows are marked unvalidated when any validation
/// series misses its thresholds.
pub fn reproduce(base: &ExperimentSpec) -> Result<Reproduction, HarnessError> {
    let vspec = validation_spec(base);
    let results = run_cells(&vspec)?;
    let validation = validation_rows(&vspec, &results);
    let ok = validation.iter().all(|v| v.pass);
    let compare = compare_rows(&results, ok);
    let gspec = granularity_spec(base);
    let granularity = run_sweep(&gspec)?;
    Ok(Reproduction {
        validation,
        compare,
        granularity,
    })
}

pub fn write_reproduction(rep: &Reproduction, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    emit_report(&rep.validation, ReportFormat::Csv, Some(&dir.join("validation.csv")))?;
    emit_report(&rep.compare, ReportFormat::Csv, Some(&dir.join("compare.csv")))?;
    emit_report(&rep.granularity, ReportFormat::Csv, Some(&dir.join("granularity.csv")))?;
    Ok(())
}
