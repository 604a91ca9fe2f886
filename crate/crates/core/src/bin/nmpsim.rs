use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nmp_coherence::analytics::{
    conda_conflict_probability, expected_block_time, BlockSpec,
};
use nmp_coherence::engine::{run_block, Strategy};
use nmp_coherence::harness::{
    compare_strategies, emit_report, fine_grained_expected, reproduce, run_sweep,
    validate_analytics, write_reproduction, ConfigError, ExperimentSpec, HarnessError,
};
use nmp_coherence::workload::load_trace_file;

const EXIT_CONFIG: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_THRESHOLD: u8 = 3;

#[derive(Parser)]
#[command(name = "nmpsim", version, about = "Speculative NMP coherence: closed forms and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form expected cycles over the grid.
    Analytic(Common),
    /// Simulate the grid, or the blocks of a trace file.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trace file to replay instead of synthetic traces.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Simulate the grid and report against the closed forms.
    Sweep(Common),
    /// Check simulation against the closed forms; exit 3 past thresholds.
    Validate(Common),
    /// Paired CONDA/MRCN comparison.
    Compare(Common),
    /// Validation, comparison and granularity study into --out.
    Reproduce(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Config file of key=value lines, applied before other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma list of fine_grained, conda, mrcn.
    #[arg(long)]
    strategy: Option<String>,
    /// List `a,b,c` or range `start:end:step`.
    #[arg(long)]
    f_nmp: Option<String>,
    #[arg(long)]
    f_cpu: Option<String>,
    /// NMP instructions per block; list or range.
    #[arg(long)]
    granularity: Option<String>,
    /// MRCN breakpoint counts; list or range.
    #[arg(long)]
    breakpoints: Option<String>,
    /// Shared address space size.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// File of seeds, one per line or whitespace separated.
    #[arg(long)]
    seed_file: Option<PathBuf>,
    /// exact_set or bloom.
    #[arg(long)]
    sig_mode: Option<String>,
    /// Output file, or directory for reproduce.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Any config key, e.g. --set timing.t_tran=40. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec, ConfigError> {
        let mut spec = ExperimentSpec::default();
        if let Some(path) = &self.config {
            spec.apply_file(path)?;
        }
        let flags = [
            ("strategy", &self.strategy),
            ("f_nmp", &self.f_nmp),
            ("f_cpu", &self.f_cpu),
            ("granularity", &self.granularity),
            ("breakpoints", &self.breakpoints),
            ("k", &self.k),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("sig.mode", &self.sig_mode),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                spec.set(key, v)?;
            }
        }
        for kv in &self.sets {
            spec.apply_text(kv, "--set")?;
        }
        if let Some(path) = &self.seed_file {
            spec.apply_seed_file(path)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Serialize)]
struct AnalyticRow {
    strategy: Strategy,
    granularity: u64,
    f_nmp: f64,
    f_cpu: f64,
    b: u32,
    theta_cpu: u64,
    conflict_probability: f64,
    expected_cycles: f64,
}

#[derive(Serialize)]
struct TraceRow {
    strategy: Strategy,
    block: usize,
    theta_nmp: u64,
    b: u32,
    cycles: f64,
    conflicts: u64,
    reexec_insts: u64,
    transactions: u64,
    retries_exhausted: bool,
}

enum Failure {
    Config(String),
    Io(String),
    Threshold(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn header(spec: &ExperimentSpec) {
    eprintln!("# nmpsim {} {}", env!("CARGO_PKG_VERSION"), spec.provenance());
}

fn analytic_rows(spec: &ExperimentSpec) -> Result<Vec<AnalyticRow>, HarnessError> {
    let mut rows = Vec::new();
    for &strategy in &spec.strategies {
        for &theta in &spec.granularity {
            let bs: &[u32] = if strategy == Strategy::Mrcn { &spec.breakpoints } else { &[1] };
            for &b in bs {
                for &f in &spec.f_nmp {
                    let params = spec.params(f)?;
                    let block = BlockSpec::with_epoch_cpu(&params, theta, b)?;
                    let expected = match strategy.model() {
                        Some(m) => expected_block_time(&params, &block, m)?,
                        None => fine_grained_expected(
                            &params,
                            &block,
                            spec.fine_grained_access_cost.unwrap_or(params.t_tran),
                        ),
                    };
                    let p = match strategy {
                        Strategy::FineGrained => 0.0,
                        _ => conda_conflict_probability(&params, &block)?,
                    };
                    rows.push(AnalyticRow {
                        strategy,
                        granularity: theta,
                        f_nmp: f,
                        f_cpu: params.f_cpu,
                        b,
                        theta_cpu: block.theta_cpu,
                        conflict_probability: p,
                        expected_cycles: expected,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn simulate_trace(spec: &ExperimentSpec, path: &PathBuf) -> Result<Vec<TraceRow>, Failure> {
    let (plan, traces) = load_trace_file(path).map_err(|e| match e {
        nmp_coherence::workload::TraceError::Io { .. } => Failure::Io(e.to_string()),
        _ => Failure::Config(e.to_string()),
    })?;
    let mut params = spec
        .params(spec.f_nmp[0])
        .map_err(|e| Failure::Config(e.to_string()))?;
    params.k = plan.k;
    let mut rows = Vec::new();
    for &strategy in &spec.strategies {
        let mut cfg = spec.strategy_config(strategy, 1);
        cfg.breakpoints = None;
        for trace in &traces {
            let r = run_block(trace, &params, &cfg, spec.seed);
            rows.push(TraceRow {
                strategy,
                block: trace.block_id,
                theta_nmp: trace.block.theta_nmp,
                b: trace.block.breakpoints,
                cycles: r.cycles,
                conflicts: r.conflicts,
                reexec_insts: r.instructions_reexecuted,
                transactions: r.transactions,
                retries_exhausted: r.retries_exhausted,
            });
        }
    }
    Ok(rows)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analytic(c) => {
            let spec = c.spec()?;
            header(&spec);
            emit_report(&analytic_rows(&spec)?, spec.format, spec.out.as_deref())?;
        }
        Command::Simulate { common, trace } => {
            let spec = common.spec()?;
            header(&spec);
            match trace {
                Some(path) => {
                    let rows = simulate_trace(&spec, &path)?;
                    emit_report(&rows, spec.format, spec.out.as_deref())?;
                }
                None => emit_report(&run_sweep(&spec)?, spec.format, spec.out.as_deref())?,
            }
        }
        Command::Sweep(c) => {
            let spec = c.spec()?;
            header(&spec);
            emit_report(&run_sweep(&spec)?, spec.format, spec.out.as_deref())?;
        }
        Command::Validate(c) => {
            let spec = c.spec()?;
            header(&spec);
            let rows = validate_analytics(&spec)?;
            emit_report(&rows, spec.format, spec.out.as_deref())?;
            let failed: Vec<String> = rows
                .iter()
                .filter(|r| !r.pass)
                .map(|r| {
                    format!(
                        "{} theta={} b={}: mean {:.2}% max {:.2}%",
                        r.strategy, r.granularity, r.b, r.mean_error_pct, r.max_error_pct
                    )
                })
                .collect();
            if !failed.is_empty() {
                return Err(Failure::Threshold(format!(
                    "validation thresholds (mean <= {}%, max <= {}%) missed by {}",
                    spec.mean_error_pct,
                    spec.max_error_pct,
                    failed.join("; ")
                )));
            }
        }
        Command::Compare(c) => {
            let spec = c.spec()?;
            header(&spec);
            emit_report(&compare_strategies(&spec)?, spec.format, spec.out.as_deref())?;
        }
        Command::Reproduce(c) => {
            let spec = c.spec()?;
            header(&spec);
            let dir = spec
                .out
                .clone()
                .ok_or_else(|| Failure::Config("reproduce needs --out <dir>".into()))?;
            let rep = reproduce(&spec)?;
            write_reproduction(&rep, &dir)?;
            eprintln!("wrote {}/{{validation,compare,granularity}}.csv", dir.display());
            if !rep.validated() {
                return Err(Failure::Threshold(
                    "analytic validation failed; compare.csv is marked unvalidated".into(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Threshold(msg)) => {
            eprintln!("threshold: {msg}");
            ExitCode::from(EXIT_THRESHOLD)
        }
    }
}
