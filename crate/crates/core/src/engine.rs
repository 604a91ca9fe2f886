//! Epoch-level simulator for the three coherence strategies.
//!
//! Time is counted in NMP cycles. An NMP pass over instructions costs
//! `t_inst` each, every signature validation costs `t_tran`, and a clean
//! validation is followed by a `t_commit` commit. The CPU never stalls; it
//! only contributes the accesses that land in the log between validations.
//!
//! Re-executions replay the NMP's own addresses. The CPU accesses seen by
//! retry `r` come from the stream `(seed, block, CpuRetry, r)` and their
//! number grows with the retry's span, so a shorter MRCN retry sees a
//! prefix of what the matching CONDA retry sees.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{CoherenceModel, ModelError, SystemParams};
use crate::protocol::{earliest_conflict, ConflictMode, Signature, SignatureConfig};
use crate::stats::Summary;
use crate::streams::{stream, Purpose};
use crate::workload::{segment_bounds, EpochTrace, OffloadPlan, TraceGen};

pub const DEFAULT_MAX_RETRIES: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    FineGrained,
    Conda,
    Mrcn,
}

impl Strategy {
    pub fn model(self) -> Option<CoherenceModel> {
        match self {
            Strategy::FineGrained => None,
            Strategy::Conda => Some(CoherenceModel::Conda),
            Strategy::Mrcn => Some(CoherenceModel::Mrcn),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::FineGrained => "fine_grained",
            Strategy::Conda => "conda",
            Strategy::Mrcn => "mrcn",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "fine_grained" | "fine" | "fg" => Ok(Strategy::FineGrained),
            "conda" => Ok(Strategy::Conda),
            "mrcn" => Ok(Strategy::Mrcn),
            _ => Err(format!("unknown strategy `{s}` (fine_grained, conda, mrcn)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    /// Overrides the blocks' own breakpoint counts when set.
    pub breakpoints: Option<u32>,
    pub conflict_mode: ConflictMode,
    pub signature: SignatureConfig,
    /// Cycles per shared access under fine-grained coherence; `t_tran` when unset.
    pub fine_grained_access_cost: Option<f64>,
    pub max_retries: u32,
    /// Idle NMP cycles before each re-execution.
    pub slot_gap_cycles: f64,
    pub trace_gen: TraceGen,
}

impl StrategyConfig {
    pub fn new(strategy: Strategy) -> Self {
        StrategyConfig {
            strategy,
            breakpoints: None,
            conflict_mode: ConflictMode::AddressOverlap,
            signature: SignatureConfig::default(),
            fine_grained_access_cost: None,
            max_retries: DEFAULT_MAX_RETRIES,
            slot_gap_cycles: 0.0,
            trace_gen: TraceGen::default(),
        }
    }

    pub fn with_breakpoints(mut self, b: u32) -> Self {
        self.breakpoints = Some(b);
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.breakpoints == Some(0) {
            return Err(EngineError::Config("breakpoints must be at least 1".into()));
        }
        if !(self.slot_gap_cycles.is_finite() && self.slot_gap_cycles >= 0.0) {
            return Err(EngineError::Config("slot_gap_cycles must be >= 0".into()));
        }
        if let Some(c) = self.fine_grained_access_cost {
            if !(c.is_finite() && c >= 0.0) {
                return Err(EngineError::Config(
                    "fine_grained_access_cost must be >= 0".into(),
                ));
            }
        }
        let w = self.trace_gen.write_ratio;
        if !(0.0..=1.0).contains(&w) {
            return Err(EngineError::Config("write ratio must be in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no seeds given")]
    NoSeeds,
    #[error("plan shared space K={plan} differs from params K={params}")]
    SpaceMismatch { plan: u64, params: u64 },
    #[error("invalid strategy config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub block_id: usize,
    pub cycles: f64,
    /// Validations that reported a conflict.
    pub conflicts: u64,
    pub instructions_executed: u64,
    pub instructions_reexecuted: u64,
    pub transactions: u64,
    pub commits: u64,
    pub retries_exhausted: bool,
    /// First conflicting segment of each failed validation, in order.
    pub rollback_segments: Vec<u32>,
    /// How many times each segment's instructions ran.
    pub segment_executions: Vec<u64>,
}

impl BlockReport {
    pub fn first_attempt_conflict(&self) -> bool {
        self.conflicts > 0
    }

    fn empty(trace: &EpochTrace, segments: usize) -> Self {
        BlockReport {
            block_id: trace.block_id,
            cycles: 0.0,
            conflicts: 0,
            instructions_executed: 0,
            instructions_reexecuted: 0,
            transactions: 0,
            commits: 0,
            retries_exhausted: false,
            rollback_segments: Vec::new(),
            segment_executions: vec![0; segments],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rollback {
    WholeBlock,
    FirstConflict,
}

fn with_bounds(trace: &EpochTrace, cfg: &StrategyConfig) -> Option<EpochTrace> {
    match cfg.breakpoints {
        Some(b) if b != trace.segments() => {
            let mut t = trace.clone();
            t.block.breakpoints = b;
            t.segment_bounds = segment_bounds(t.block.theta_nmp, b);
            Some(t)
        }
        _ => None,
    }
}

fn replay_signature(trace: &EpochTrace, cfg: &StrategyConfig, start: u32) -> Signature {
    let tagged: Vec<_> = trace.tagged_nmp().filter(|&(_, seg)| seg >= start).collect();
    let mut sig = Signature::with_config(&cfg.signature, trace.segments(), tagged.len());
    for (a, seg) in tagged {
        sig.insert(a.address, a.kind, seg);
    }
    sig
}

fn run_speculative(
    trace: &EpochTrace,
    params: &SystemParams,
    cfg: &StrategyConfig,
    seed: u64,
    rollback: Rollback,
) -> BlockReport {
    let b = trace.segments();
    let mut report = BlockReport::empty(trace, b as usize);
    let mut signatures: Vec<Option<Signature>> = vec![None; b as usize];

    let mut start = 1u32;
    let mut retry = 0u32;
    loop {
        let insts = trace.instructions_from(start);
        report.cycles += insts as f64 * params.t_inst + params.t_tran;
        report.instructions_executed += insts;
        if retry > 0 {
            report.instructions_reexecuted += insts;
        }
        for count in &mut report.segment_executions[start as usize - 1..] {
            *count += 1;
        }
        report.transactions += 1;

        let sig = signatures[start as usize - 1]
            .get_or_insert_with(|| replay_signature(trace, cfg, start));
        let conflict = if retry == 0 {
            let window = trace.cpu_accesses.iter().map(|a| (a.address, a.kind));
            earliest_conflict(sig, window, cfg.conflict_mode, start)
        } else {
            // The window of retry r covers the re-execution that just ran.
            let span = insts as f64 * params.t_inst + params.t_tran + cfg.slot_gap_cycles;
            let mut rng = stream(seed, trace.block_id as u64, Purpose::CpuRetry, retry as u64);
            let window = cfg
                .trace_gen
                .cpu_window_iter(&mut rng, params, span)
                .map(|a| (a.address, a.kind));
            earliest_conflict(sig, window, cfg.conflict_mode, start)
        };
        let Some(seg) = conflict else {
            break;
        };
        report.conflicts += 1;
        report.rollback_segments.push(seg);
        if retry == cfg.max_retries {
            report.retries_exhausted = true;
            break;
        }
        retry += 1;
        start = match rollback {
            Rollback::WholeBlock => 1,
            Rollback::FirstConflict => seg,
        };
        report.cycles += cfg.slot_gap_cycles;
    }
    report.cycles += params.t_commit;
    report.commits = 1;
    report
}

/// Full-block rollback: any conflict re-executes the whole block.
pub fn run_block_conda(
    trace: &EpochTrace,
    params: &SystemParams,
    cfg: &StrategyConfig,
    seed: u64,
) -> BlockReport {
    run_speculative(trace, params, cfg, seed, Rollback::WholeBlock)
}

/// Breakpoint rollback: re-execution resumes at the first conflicting segment.
pub fn run_block_mrcn(
    trace: &EpochTrace,
    params: &SystemParams,
    cfg: &StrategyConfig,
    seed: u64,
) -> BlockReport {
    match with_bounds(trace, cfg) {
        Some(t) => run_speculative(&t, params, cfg, seed, Rollback::FirstConflict),
        None => run_speculative(trace, params, cfg, seed, Rollback::FirstConflict),
    }
}

/// Every shared access pays a coherence round trip up front; nothing is
/// speculative so nothing rolls back.
pub fn run_block_fine_grained(
    trace: &EpochTrace,
    params: &SystemParams,
    cfg: &StrategyConfig,
) -> BlockReport {
    let cost = cfg.fine_grained_access_cost.unwrap_or(params.t_tran);
    let theta = trace.block.theta_nmp;
    let shared = trace.nmp_accesses.len() as u64;
    let mut report = BlockReport::empty(trace, trace.segments() as usize);
    report.cycles = theta as f64 * params.t_inst + shared as f64 * cost;
    report.instructions_executed = theta;
    report.transactions = shared;
    report.segment_executions.fill(1);
    report
}

pub fn run_block(
    trace: &EpochTrace,
    params: &SystemParams,
    cfg: &StrategyConfig,
    seed: u64,
) -> BlockReport {
    match cfg.strategy {
        Strategy::FineGrained => run_block_fine_grained(trace, params, cfg),
        Strategy::Conda => run_block_conda(trace, params, cfg, seed),
        Strategy::Mrcn => run_block_mrcn(trace, params, cfg, seed),
    }
}

/// Aggregate over seeds. Counters are per-trial means summed over blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: Strategy,
    pub trials: usize,
    pub total_cycles: Summary,
    pub per_block_cycles: Vec<f64>,
    pub conflicts_detected: f64,
    pub instructions_executed: f64,
    pub instructions_reexecuted: f64,
    pub coherence_transactions: f64,
    pub commits: f64,
    /// Block runs that hit `max_retries`.
    pub retries_exhausted: u64,
    /// Block runs whose first validation failed.
    pub first_attempt_conflicts: u64,
    /// Total cycles of each seed, in seed order.
    pub seed_totals: Vec<f64>,
}

impl RunReport {
    pub fn mean_cycles(&self) -> f64 {
        self.total_cycles.mean
    }
}

/// Run every block of `plan` once per seed.
pub fn run_plan(
    plan: &OffloadPlan,
    params: &SystemParams,
    cfg: &StrategyConfig,
    seeds: &[u64],
) -> Result<RunReport, EngineError> {
    if seeds.is_empty() {
        return Err(EngineError::NoSeeds);
    }
    if plan.blocks.is_empty() {
        return Err(ModelError::EmptyPlan.into());
    }
    if plan.k != params.k {
        return Err(EngineError::SpaceMismatch {
            plan: plan.k,
            params: params.k,
        });
    }
    params.validate()?;
    cfg.validate()?;

    let runs: Vec<Vec<BlockReport>> = seeds
        .par_iter()
        .map(|&seed| {
            (0..plan.blocks.len())
                .map(|i| {
                    let trace = cfg.trace_gen.epoch(plan, i, params, seed)?;
                    Ok(run_block(&trace, params, cfg, seed))
                })
                .collect::<Result<Vec<_>, ModelError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(aggregate(cfg.strategy, plan.blocks.len(), &runs))
}

fn aggregate(strategy: Strategy, blocks: usize, runs: &[Vec<BlockReport>]) -> RunReport {
    let trials = runs.len();
    let per_trial = |f: &dyn Fn(&BlockReport) -> f64| {
        runs.iter().map(|r| r.iter().map(f).sum::<f64>()).sum::<f64>() / trials as f64
    };
    let seed_totals: Vec<f64> = runs
        .iter()
        .map(|r| r.iter().map(|b| b.cycles).sum())
        .collect();
    let per_block_cycles = (0..blocks)
        .map(|i| runs.iter().map(|r| r[i].cycles).sum::<f64>() / trials as f64)
        .collect();
    let count = |f: &dyn Fn(&BlockReport) -> bool| {
        runs.iter().flatten().filter(|b| f(b)).count() as u64
    };
    RunReport {
        strategy,
        trials,
        total_cycles: Summary::of(&seed_totals),
        per_block_cycles,
        conflicts_detected: per_trial(&|b| b.conflicts as f64),
        instructions_executed: per_trial(&|b| b.instructions_executed as f64),
        instructions_reexecuted: per_trial(&|b| b.instructions_reexecuted as f64),
        coherence_transactions: per_trial(&|b| b.transactions as f64),
        commits: per_trial(&|b| b.commits as f64),
        retries_exhausted: count(&|b| b.retries_exhausted),
        first_attempt_conflicts: count(&|b| b.first_attempt_conflict()),
        seed_totals,
    }
}
