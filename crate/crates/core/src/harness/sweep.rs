use serde::{Deserialize, Serialize};

use super::config::ExperimentSpec;
use super::HarnessError;
use crate::analytics::{expected_block_time, BlockSpec, SystemParams};
use crate::engine::{run_plan, RunReport, Strategy};
use crate::protocol::SignatureMode;
use crate::workload::OffloadPlan;

/// One point of a sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub strategy: Strategy,
    pub granularity: u64,
    /// Breakpoints; 1 for strategies that do not use them.
    pub b: u32,
    pub f_nmp: f64,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub params: SystemParams,
    pub block: BlockSpec,
    pub report: RunReport,
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: Strategy,
    pub granularity: u64,
    pub f_nmp: f64,
    pub f_cpu: f64,
    pub b: u32,
    pub trials: usize,
    pub sim_mean_cycles: f64,
    pub sim_ci95: f64,
    pub analytic_cycles: f64,
    pub error_pct: f64,
    pub conflicts_mean: f64,
    pub reexec_insts_mean: f64,
    pub transactions_mean: f64,
    pub speedup_vs_fine_grained: f64,
    /// Some trial hit the retry cap, so the mean is truncated.
    pub retries_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub strategy: Strategy,
    pub granularity: u64,
    pub b: u32,
    pub points: usize,
    pub mean_error_pct: f64,
    pub max_error_pct: f64,
    pub worst_f_nmp: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub granularity: u64,
    pub b: u32,
    pub f_nmp: f64,
    pub trials: usize,
    pub conda_cycles: f64,
    pub mrcn_cycles: f64,
    pub improvement_pct: f64,
    pub seed_improvement_min_pct: f64,
    pub seed_improvement_max_pct: f64,
    /// Seeds where MRCN took longer than CONDA.
    pub dominance_violations: usize,
    pub validated: bool,
}

/// Grid order: strategy, granularity, breakpoints, f_nmp.
pub fn cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let mut out = Vec::new();
    for &strategy in &spec.strategies {
        for &granularity in &spec.granularity {
            let bs: &[u32] = if strategy == Strategy::Mrcn {
                &spec.breakpoints
            } else {
                &[1]
            };
            for &b in bs {
                for &f_nmp in &spec.f_nmp {
                    out.push(Cell {
                        strategy,
                        granularity,
                        b,
                        f_nmp,
                    });
                }
            }
        }
    }
    out
}

/// Cycles per block with no speculation: every shared access pays `cost`.
pub fn fine_grained_expected(params: &SystemParams, block: &BlockSpec, cost: f64) -> f64 {
    let theta = block.theta_nmp as f64;
    theta * params.t_inst + params.f_nmp * theta * cost
}

pub fn run_cell(spec: &ExperimentSpec, cell: Cell, seeds: &[u64]) -> Result<CellResult, HarnessError> {
    let params = spec.params(cell.f_nmp)?;
    let plan = OffloadPlan::uniform(&params, cell.granularity, cell.b, 1, spec.seed)?;
    let block = plan.blocks[0];
    let cfg = spec.strategy_config(cell.strategy, cell.b);
    let report = run_plan(&plan, &params, &cfg, seeds)?;
    let analytic = match cell.strategy.model() {
        Some(model) => expected_block_time(&params, &block, model)?,
        None => fine_grained_expected(
            &params,
            &block,
            spec.fine_grained_access_cost.unwrap_or(params.t_tran),
        ),
    };
    Ok(CellResult {
        cell,
        params,
        block,
        report,
        analytic,
    })
}

/// Run every cell of the grid on the shared seed list.
pub fn run_cells(spec: &ExperimentSpec) -> Result<Vec<CellResult>, HarnessError> {
    spec.validate()?;
    let seeds = spec.seed_list();
    cells(spec)
        .into_iter()
        .map(|cell| run_cell(spec, cell, &seeds))
        .collect()
}

/// Relative to the simulated mean.
pub fn error_pct(sim: f64, analytic: f64) -> f64 {
    100.0 * (analytic - sim).abs() / sim
}

fn find(results: &[CellResult], strategy: Strategy, granularity: u64, b: u32, f: f64) -> Option<&CellResult> {
    results.iter().find(|r| {
        r.cell.strategy == strategy
            && r.cell.granularity == granularity
            && r.cell.b == b
            && r.cell.f_nmp == f
    })
}

/// Build rows from finished cells. Fine-grained baselines missing from
/// `results` are run on demand for the speedup column.
pub fn sweep_rows(spec: &ExperimentSpec, results: &[CellResult]) -> Result<Vec<SweepRow>, HarnessError> {
    let seeds = spec.seed_list();
    let mut baselines: Vec<CellResult> = Vec::new();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        let c = r.cell;
        let baseline = match find(results, Strategy::FineGrained, c.granularity, 1, c.f_nmp)
            .or_else(|| find(&baselines, Strategy::FineGrained, c.granularity, 1, c.f_nmp))
        {
            Some(base) => base.report.mean_cycles(),
            None => {
                let cell = Cell {
                    strategy: Strategy::FineGrained,
                    b: 1,
                    ..c
                };
                let base = run_cell(spec, cell, &seeds)?;
                let mean = base.report.mean_cycles();
                baselines.push(base);
                mean
            }
        };
        let sim = r.report.mean_cycles();
        rows.push(SweepRow {
            strategy: c.strategy,
            granularity: c.granularity,
            f_nmp: c.f_nmp,
            f_cpu: r.params.f_cpu,
            b: c.b,
            trials: r.report.trials,
            sim_mean_cycles: sim,
            sim_ci95: r.report.total_cycles.ci95,
            analytic_cycles: r.analytic,
            error_pct: error_pct(sim, r.analytic),
            conflicts_mean: r.report.conflicts_detected,
            reexec_insts_mean: r.report.instructions_reexecuted,
            transactions_mean: r.report.coherence_transactions,
            speedup_vs_fine_grained: baseline / sim,
            retries_exhausted: r.report.retries_exhausted > 0,
        });
    }
    Ok(rows)
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>, HarnessError> {
    let results = run_cells(spec)?;
    sweep_rows(spec, &results)
}

/// Mean and max error of simulation against the closed forms, per
/// (strategy, granularity, breakpoints) series.
pub fn validation_rows(spec: &ExperimentSpec, results: &[CellResult]) -> Vec<ValidationRow> {
    let mut rows: Vec<ValidationRow> = Vec::new();
    for r in results.iter().filter(|r| r.cell.strategy != Strategy::FineGrained) {
        let c = r.cell;
        let err = error_pct(r.report.mean_cycles(), r.analytic);
        let row = match rows
            .iter_mut()
            .find(|v| v.strategy == c.strategy && v.granularity == c.granularity && v.b == c.b)
        {
            Some(row) => row,
            None => {
                rows.push(ValidationRow {
                    strategy: c.strategy,
                    granularity: c.granularity,
                    b: c.b,
                    points: 0,
                    mean_error_pct: 0.0,
                    max_error_pct: 0.0,
                    worst_f_nmp: c.f_nmp,
                    pass: false,
                });
                rows.last_mut().unwrap()
            }
        };
        row.mean_error_pct += err;
        row.points += 1;
        if err > row.max_error_pct {
            row.max_error_pct = err;
            row.worst_f_nmp = c.f_nmp;
        }
    }
    for row in &mut rows {
        row.mean_error_pct /= row.points as f64;
        row.pass = row.mean_error_pct <= spec.mean_error_pct && row.max_error_pct <= spec.max_error_pct;
    }
    rows
}

/// The closed forms assume exact address sets, so validation always uses them.
pub fn validate_analytics(spec: &ExperimentSpec) -> Result<Vec<ValidationRow>, HarnessError> {
    let mut spec = spec.clone();
    spec.signature.mode = SignatureMode::ExactSet;
    spec.strategies.retain(|&s| s != Strategy::FineGrained);
    let results = run_cells(&spec)?;
    Ok(validation_rows(&spec, &results))
}

/// Pair every MRCN cell with the CONDA cell at the same granularity and
/// f_nmp. Both ran on the same seeds, so per-seed differences are paired.
pub fn compare_rows(results: &[CellResult], validated: bool) -> Vec<CompareRow> {
    let mut rows = Vec::new();
    for m in results.iter().filter(|r| r.cell.strategy == Strategy::Mrcn) {
        let c = m.cell;
        let Some(conda) = find(results, Strategy::Conda, c.granularity, 1, c.f_nmp) else {
            continue;
        };
        let pairs = conda.report.seed_totals.iter().zip(&m.report.seed_totals);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut violations = 0;
        for (&a, &b) in pairs {
            let imp = 100.0 * (a - b) / a;
            lo = lo.min(imp);
            hi = hi.max(imp);
            if b > a + 1e-9 * a.abs().max(1.0) {
                violations += 1;
            }
        }
        let (cm, mm) = (conda.report.mean_cycles(), m.report.mean_cycles());
        rows.push(CompareRow {
            granularity: c.granularity,
            b: c.b,
            f_nmp: c.f_nmp,
            trials: m.report.trials,
            conda_cycles: cm,
            mrcn_cycles: mm,
            improvement_pct: 100.0 * (cm - mm) / cm,
            seed_improvement_min_pct: lo,
            seed_improvement_max_pct: hi,
            dominance_violations: violations,
            validated,
        });
    }
    rows
}

pub fn compare_strategies(spec: &ExperimentSpec) -> Result<Vec<CompareRow>, HarnessError> {
    let mut spec = spec.clone();
    spec.strategies = vec![Strategy::Conda, Strategy::Mrcn];
    let results = run_cells(&spec)?;
    Ok(compare_rows(&results, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentSpec {
        ExperimentSpec {
            strategies: vec![Strategy::FineGrained, Strategy::Conda, Strategy::Mrcn],
            f_nmp: vec![0.1, 0.3],
            granularity: vec![50],
            breakpoints: vec![1, 4],
            trials: 40,
            ..Default::default()
        }
    }

    #[test]
    fn cell_order() {
        let got: Vec<_> = cells(&small())
            .iter()
            .map(|c| (c.strategy, c.b, c.f_nmp))
            .collect();
        assert_eq!(got.len(), 2 + 2 + 4);
        assert_eq!(got[0], (Strategy::FineGrained, 1, 0.1));
        assert_eq!(got[4], (Strategy::Mrcn, 1, 0.1));
        assert_eq!(got[7], (Strategy::Mrcn, 4, 0.3));
    }

    #[test]
    fn rows_are_consistent() {
        let spec = small();
        let results = run_cells(&spec).unwrap();
        let rows = sweep_rows(&spec, &results).unwrap();
        assert_eq!(rows.len(), results.len());
        for row in rows.iter().filter(|r| r.strategy == Strategy::FineGrained) {
            assert!((row.speedup_vs_fine_grained - 1.0).abs() < 1e-12);
            assert_eq!(row.reexec_insts_mean, 0.0);
        }
        let cmp = compare_rows(&results, true);
        assert_eq!(cmp.len(), 4);
        for row in &cmp {
            assert_eq!(row.dominance_violations, 0);
            if row.b == 1 {
                assert!(row.improvement_pct.abs() < 1e-9);
            }
        }
        let val = validation_rows(&spec, &results);
        assert_eq!(val.len(), 3);
        assert!(val.iter().all(|v| v.points == 2));
    }

    #[test]
    fn fine_grained_baseline_is_run_on_demand() {
        let spec = ExperimentSpec {
            strategies: vec![Strategy::Conda],
            ..small()
        };
        let rows = run_sweep(&spec).unwrap();
        assert!(rows.iter().all(|r| r.speedup_vs_fine_grained > 0.0));
    }
}
