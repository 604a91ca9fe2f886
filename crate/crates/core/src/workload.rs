//! Synthetic per-epoch access traces and the text trace format.
//!
//! Shared accesses are drawn uniformly with replacement over the `K`
//! locations. Instructions that do not touch the shared segment carry no
//! address; they only cost time, so a trace records just the shared
//! accesses and the instruction slot each one occupies.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{BlockSpec, ModelError, SystemParams};
use crate::streams::{stream, Purpose};

pub const DEFAULT_WRITE_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Cpu,
    Nmp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub address: u64,
    pub side: Side,
    pub kind: AccessKind,
    /// Instruction slot within the side's epoch stream. Strictly increasing.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub block_id: usize,
    pub block: BlockSpec,
    pub nmp_accesses: Vec<Access>,
    pub cpu_accesses: Vec<Access>,
    /// `b + 1` cut points over the NMP instruction stream, `0 ..= theta_nmp`.
    pub segment_bounds: Vec<u64>,
}

impl EpochTrace {
    pub fn segments(&self) -> u32 {
        (self.segment_bounds.len() - 1) as u32
    }

    /// 1-based segment holding instruction `slot`.
    pub fn segment_of(&self, slot: u64) -> u32 {
        segment_of(&self.segment_bounds, slot)
    }

    /// NMP accesses paired with their 1-based segment.
    pub fn tagged_nmp(&self) -> impl Iterator<Item = (&Access, u32)> + '_ {
        self.nmp_accesses
            .iter()
            .map(move |a| (a, self.segment_of(a.seq)))
    }

    /// Instructions from the start of segment `j` (1-based) to the end.
    pub fn instructions_from(&self, j: u32) -> u64 {
        self.block.theta_nmp - self.segment_bounds[(j - 1) as usize]
    }
}

/// Equal-width cut points; the last segment absorbs the remainder.
pub fn segment_bounds(theta: u64, b: u32) -> Vec<u64> {
    let step = theta / b as u64;
    let mut bounds: Vec<u64> = (0..b as u64).map(|j| j * step).collect();
    bounds.push(theta);
    bounds
}

pub fn segment_of(bounds: &[u64], slot: u64) -> u32 {
    bounds[1..].partition_point(|&cut| cut <= slot) as u32 + 1
}

/// Blocks offloaded to the NMP, all over the same shared space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffloadPlan {
    pub blocks: Vec<BlockSpec>,
    pub k: u64,
    pub seed: u64,
}

impl OffloadPlan {
    pub fn new(blocks: Vec<BlockSpec>, k: u64, seed: u64) -> Result<Self, ModelError> {
        if blocks.is_empty() {
            return Err(ModelError::EmptyPlan);
        }
        if k == 0 {
            return Err(ModelError::Domain {
                name: "k",
                reason: "must be at least 1".into(),
            });
        }
        for b in &blocks {
            b.validate()?;
        }
        Ok(OffloadPlan { blocks, k, seed })
    }

    /// `count` identical blocks of `theta_nmp` instructions, each with the
    /// CPU instruction count of one epoch.
    pub fn uniform(
        params: &SystemParams,
        theta_nmp: u64,
        breakpoints: u32,
        count: usize,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let block = BlockSpec::with_epoch_cpu(params, theta_nmp, breakpoints)?;
        Self::new(vec![block; count], params.k, seed)
    }
}

fn round_count(x: f64) -> u64 {
    x.round().max(0.0) as u64
}

/// Trace synthesis settings. The write ratio only matters to the
/// read/write-aware conflict mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceGen {
    pub write_ratio: f64,
}

impl Default for TraceGen {
    fn default() -> Self {
        TraceGen {
            write_ratio: DEFAULT_WRITE_RATIO,
        }
    }
}

impl TraceGen {
    fn kind(&self, rng: &mut ChaCha8Rng) -> AccessKind {
        if rng.gen_bool(self.write_ratio) {
            AccessKind::Write
        } else {
            AccessKind::Read
        }
    }

    /// `count` accesses at uniformly chosen distinct slots of `0..slots`.
    fn placed(
        &self,
        rng: &mut ChaCha8Rng,
        side: Side,
        k: u64,
        count: u64,
        slots: u64,
    ) -> Vec<Access> {
        let count = count.min(slots);
        let mut positions = index::sample(rng, slots as usize, count as usize).into_vec();
        positions.sort_unstable();
        positions
            .into_iter()
            .map(|seq| Access {
                address: rng.gen_range(0..k),
                side,
                kind: self.kind(rng),
                seq: seq as u64,
            })
            .collect()
    }

    pub fn epoch(
        &self,
        plan: &OffloadPlan,
        block_index: usize,
        params: &SystemParams,
        seed: u64,
    ) -> Result<EpochTrace, ModelError> {
        let block = *plan.blocks.get(block_index).ok_or(ModelError::Index {
            name: "block",
            index: block_index as u32,
            lo: 0,
            hi: plan.blocks.len() as u32 - 1,
        })?;
        let id = block_index as u64;
        let n = round_count(params.f_nmp * block.theta_nmp as f64);
        let c = round_count(params.f_cpu * block.theta_cpu as f64);
        let mut nmp_rng = stream(seed, id, Purpose::NmpTrace, 0);
        let mut cpu_rng = stream(seed, id, Purpose::CpuTrace, 0);
        Ok(EpochTrace {
            block_id: block_index,
            block,
            nmp_accesses: self.placed(&mut nmp_rng, Side::Nmp, plan.k, n, block.theta_nmp),
            cpu_accesses: self.placed(&mut cpu_rng, Side::Cpu, plan.k, c, block.theta_cpu),
            segment_bounds: segment_bounds(block.theta_nmp, block.breakpoints),
        })
    }

    /// Number of shared accesses the CPU makes in `duration` NMP cycles.
    pub fn window_len(params: &SystemParams, duration: f64) -> u64 {
        round_count(params.f_cpu * duration / params.t_cpu)
    }

    /// CPU accesses over `duration` cycles, drawn in order from `rng`.
    /// Any shorter window from the same stream is a prefix of a longer one.
    pub fn cpu_window_from(
        &self,
        rng: &mut ChaCha8Rng,
        params: &SystemParams,
        duration: f64,
    ) -> Vec<Access> {
        let mut out = Vec::new();
        self.extend_cpu_window(rng, params, duration, |a| out.push(a));
        out
    }

    pub(crate) fn extend_cpu_window(
        &self,
        rng: &mut ChaCha8Rng,
        params: &SystemParams,
        duration: f64,
        sink: impl FnMut(Access),
    ) {
        self.cpu_window_iter(rng, params, duration).for_each(sink);
    }

    /// Lazy form of [`TraceGen::cpu_window_from`].
    pub(crate) fn cpu_window_iter<'a>(
        &'a self,
        rng: &'a mut ChaCha8Rng,
        params: &SystemParams,
        duration: f64,
    ) -> impl Iterator<Item = Access> + 'a {
        let k = params.k;
        (0..Self::window_len(params, duration)).map(move |seq| {
            let address = rng.gen_range(0..k);
            Access {
                address,
                side: Side::Cpu,
                kind: self.kind(rng),
                seq,
            }
        })
    }
}

pub fn generate_epoch(
    plan: &OffloadPlan,
    block_index: usize,
    params: &SystemParams,
    seed: u64,
) -> Result<EpochTrace, ModelError> {
    TraceGen::default().epoch(plan, block_index, params, seed)
}

pub fn fresh_cpu_window(params: &SystemParams, duration_cycles: f64, seed: u64) -> Vec<Access> {
    let mut rng = stream(seed, 0, Purpose::CpuWindow, 0);
    TraceGen::default().cpu_window_from(&mut rng, params, duration_cycles.max(0.0))
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Domain { line: usize, msg: String },
    #[error("{}{msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Structure { line: Option<usize>, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Cpu => "CPU",
            Side::Nmp => "NMP",
        })
    }
}

struct BlockBuilder {
    line: usize,
    block: BlockSpec,
    nmp: Vec<(u64, AccessKind)>,
    cpu: Vec<(u64, AccessKind)>,
}

/// Evenly spread `accesses` over `slots` instruction slots.
fn spread(side: Side, accesses: Vec<(u64, AccessKind)>, slots: u64) -> Vec<Access> {
    let n = accesses.len() as u64;
    accesses
        .into_iter()
        .enumerate()
        .map(|(i, (address, kind))| Access {
            address,
            side,
            kind,
            seq: i as u64 * slots / n,
        })
        .collect()
}

impl BlockBuilder {
    fn finish(self, id: usize) -> Result<EpochTrace, TraceError> {
        let structure = |msg: String| TraceError::Structure {
            line: Some(self.line),
            msg,
        };
        if self.nmp.len() as u64 > self.block.theta_nmp {
            return Err(structure(format!(
                "block {id} has {} NMP accesses but THETA_NMP={}",
                self.nmp.len(),
                self.block.theta_nmp
            )));
        }
        if self.cpu.len() as u64 > self.block.theta_cpu {
            return Err(structure(format!(
                "block {id} has {} CPU accesses but THETA_CPU={}",
                self.cpu.len(),
                self.block.theta_cpu
            )));
        }
        Ok(EpochTrace {
            block_id: id,
            block: self.block,
            nmp_accesses: spread(Side::Nmp, self.nmp, self.block.theta_nmp),
            cpu_accesses: spread(Side::Cpu, self.cpu, self.block.theta_cpu),
            segment_bounds: segment_bounds(self.block.theta_nmp, self.block.breakpoints),
        })
    }
}

fn parse_kv<'a>(token: &'a str, key: &str, line: usize) -> Result<&'a str, TraceError> {
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| TraceError::Parse {
            line,
            msg: format!("expected `{key}=<int>`, found `{token}`"),
        })
}

fn parse_int(text: &str, what: &str, line: usize) -> Result<u64, TraceError> {
    text.parse().map_err(|_| TraceError::Parse {
        line,
        msg: format!("{what}: `{text}` is not a non-negative integer"),
    })
}

/// Addresses are integers, but an integral float literal such as `1e9` is
/// accepted so that out-of-range values get a range error rather than a
/// syntax error.
fn parse_address(text: &str, k: u64, line: usize) -> Result<u64, TraceError> {
    let value = match text.parse::<u64>() {
        Ok(v) => v as f64,
        Err(_) => match text.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 && v.fract() == 0.0 => v,
            _ => {
                return Err(TraceError::Parse {
                    line,
                    msg: format!("address `{text}` is not a non-negative integer"),
                })
            }
        },
    };
    if value >= k as f64 {
        return Err(TraceError::Domain {
            line,
            msg: format!("address {text} outside shared space of K={k}"),
        });
    }
    Ok(value as u64)
}

/// Parse the line-oriented trace format:
///
/// ```text
/// K=<int> N=<int>
/// BLOCK <i> THETA_NMP=<int> THETA_CPU=<int> B=<int>
/// <NMP|CPU>,<R|W>,<address>
/// ```
///
/// Block ids count up from 0. Access lines are in program order and are
/// spread evenly over the block's instruction slots.
pub fn parse_trace(text: &str) -> Result<(OffloadPlan, Vec<EpochTrace>), TraceError> {
    let mut header: Option<(u64, u64)> = None;
    let mut traces = Vec::new();
    let mut current: Option<BlockBuilder> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, _)) = header else {
            let mut tokens = content.split_whitespace();
            let (Some(kt), Some(nt), None) = (tokens.next(), tokens.next(), tokens.next()) else {
                return Err(TraceError::Parse {
                    line,
                    msg: "expected header `K=<int> N=<int>`".into(),
                });
            };
            let k = parse_int(parse_kv(kt, "K", line)?, "K", line)?;
            let n = parse_int(parse_kv(nt, "N", line)?, "N", line)?;
            if k == 0 {
                return Err(TraceError::Domain {
                    line,
                    msg: "K must be at least 1".into(),
                });
            }
            header = Some((k, n));
            continue;
        };

        if let Some(rest) = content.strip_prefix("BLOCK") {
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            if tokens.len() != 4 {
                return Err(TraceError::Parse {
                    line,
                    msg: "expected `BLOCK <i> THETA_NMP=<int> THETA_CPU=<int> B=<int>`".into(),
                });
            }
            let id = parse_int(tokens[0], "block id", line)?;
            let theta_nmp = parse_int(parse_kv(tokens[1], "THETA_NMP", line)?, "THETA_NMP", line)?;
            let theta_cpu = parse_int(parse_kv(tokens[2], "THETA_CPU", line)?, "THETA_CPU", line)?;
            let b = parse_int(parse_kv(tokens[3], "B", line)?, "B", line)?;
            if let Some(done) = current.take() {
                traces.push(done.finish(traces.len())?);
            }
            if id != traces.len() as u64 {
                return Err(TraceError::Structure {
                    line: Some(line),
                    msg: format!("block {id} out of order, expected block {}", traces.len()),
                });
            }
            let b = u32::try_from(b).map_err(|_| TraceError::Domain {
                line,
                msg: format!("B={b} too large"),
            })?;
            let block = BlockSpec::new(theta_nmp, theta_cpu, b).map_err(|e| TraceError::Domain {
                line,
                msg: e.to_string(),
            })?;
            current = Some(BlockBuilder {
                line,
                block,
                nmp: Vec::new(),
                cpu: Vec::new(),
            });
            continue;
        }

        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(TraceError::Parse {
                line,
                msg: format!("expected `<SIDE>,<R|W>,<address>`, found `{content}`"),
            });
        }
        let kind = match fields[1] {
            "R" => AccessKind::Read,
            "W" => AccessKind::Write,
            other => {
                return Err(TraceError::Parse {
                    line,
                    msg: format!("access kind `{other}` is not R or W"),
                })
            }
        };
        let address = parse_address(fields[2], k, line)?;
        let Some(builder) = current.as_mut() else {
            return Err(TraceError::Structure {
                line: Some(line),
                msg: "access before any BLOCK".into(),
            });
        };
        match fields[0] {
            "NMP" => builder.nmp.push((address, kind)),
            "CPU" => builder.cpu.push((address, kind)),
            other => {
                return Err(TraceError::Parse {
                    line,
                    msg: format!("side `{other}` is not NMP or CPU"),
                })
            }
        }
    }

    if let Some(done) = current.take() {
        traces.push(done.finish(traces.len())?);
    }
    if traces.is_empty() {
        return Err(TraceError::Structure {
            line: None,
            msg: "no blocks".into(),
        });
    }
    let (k, n) = header.expect("blocks imply a header");
    if n != traces.len() as u64 {
        return Err(TraceError::Structure {
            line: None,
            msg: format!("header declares N={n} but file has {} blocks", traces.len()),
        });
    }
    let plan = OffloadPlan {
        blocks: traces.iter().map(|t| t.block).collect(),
        k,
        seed: 0,
    };
    Ok((plan, traces))
}

pub fn load_trace_file(path: impl AsRef<Path>) -> Result<(OffloadPlan, Vec<EpochTrace>), TraceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TraceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trace(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(params: &SystemParams, theta: u64, b: u32) -> OffloadPlan {
        OffloadPlan::uniform(params, theta, b, 1, 0).unwrap()
    }

    #[test]
    fn zero_nmp_fraction_gives_no_nmp_accesses() {
        let p = SystemParams::with_fractions(0.0, 0.5).unwrap();
        let t = generate_epoch(&plan(&p, 100, 5), 0, &p, 1).unwrap();
        assert!(t.nmp_accesses.is_empty());
        assert_eq!(t.cpu_accesses.len(), 113); // round(0.5 * 225)
    }

    #[test]
    fn single_location_space() {
        let p = SystemParams {
            k: 1,
            ..SystemParams::with_fractions(0.5, 0.5).unwrap()
        };
        let t = generate_epoch(&plan(&p, 100, 5), 0, &p, 3).unwrap();
        assert_eq!(t.nmp_accesses.len(), 50);
        assert!(t.nmp_accesses.iter().all(|a| a.address == 0));
    }

    #[test]
    fn generation_is_deterministic() {
        let p = SystemParams::default();
        let pl = plan(&p, 500, 5);
        let a = generate_epoch(&pl, 0, &p, 99).unwrap();
        let b = generate_epoch(&pl, 0, &p, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_epoch(&pl, 0, &p, 100).unwrap();
        assert_ne!(a.nmp_accesses, c.nmp_accesses);
    }

    #[test]
    fn nmp_accesses_do_not_depend_on_breakpoints() {
        let p = SystemParams::default();
        let a = generate_epoch(&plan(&p, 500, 1), 0, &p, 5).unwrap();
        let b = generate_epoch(&plan(&p, 500, 5), 0, &p, 5).unwrap();
        assert_eq!(a.nmp_accesses, b.nmp_accesses);
        assert_eq!(a.cpu_accesses, b.cpu_accesses);
    }

    #[test]
    fn slots_strictly_increase() {
        let p = SystemParams::with_fractions(1.0, 1.0).unwrap();
        let t = generate_epoch(&plan(&p, 100, 3), 0, &p, 8).unwrap();
        assert_eq!(t.nmp_accesses.len(), 100);
        assert!(t.nmp_accesses.windows(2).all(|w| w[0].seq < w[1].seq));
        assert!(t.cpu_accesses.windows(2).all(|w| w[0].seq < w[1].seq));
    }

    #[test]
    fn bounds_partition_the_block() {
        assert_eq!(segment_bounds(100, 5), vec![0, 20, 40, 60, 80, 100]);
        assert_eq!(segment_bounds(103, 5), vec![0, 20, 40, 60, 80, 103]);
        assert_eq!(segment_bounds(2, 3), vec![0, 0, 0, 2]);
        let b = segment_bounds(100, 5);
        assert_eq!(segment_of(&b, 0), 1);
        assert_eq!(segment_of(&b, 19), 1);
        assert_eq!(segment_of(&b, 20), 2);
        assert_eq!(segment_of(&b, 99), 5);
        assert_eq!(segment_of(&segment_bounds(2, 3), 1), 3);
    }

    #[test]
    fn cpu_windows() {
        let p = SystemParams::with_fractions(0.5, 0.5).unwrap();
        assert!(fresh_cpu_window(&p, 0.0, 1).is_empty());
        // beta_0 = 150 cycles at 1.5 CPU instructions per cycle, half shared.
        assert_eq!(fresh_cpu_window(&p, 150.0, 1).len(), 113);
        let unit = SystemParams {
            f_cpu: 1.0,
            t_cpu: 1.0,
            ..p
        };
        let w = fresh_cpu_window(&unit, 10.0, 1);
        assert_eq!(w.len(), 10);
        assert!(w.iter().all(|a| a.side == Side::Cpu && a.address < unit.k));
    }

    #[test]
    fn shorter_windows_are_prefixes() {
        let p = SystemParams::default();
        let g = TraceGen::default();
        let long = g.cpu_window_from(&mut stream(1, 2, Purpose::CpuRetry, 3), &p, 550.0);
        let short = g.cpu_window_from(&mut stream(1, 2, Purpose::CpuRetry, 3), &p, 150.0);
        assert_eq!(&long[..short.len()], &short[..]);
    }

    const SMALL: &str = "K=1024 N=1\nBLOCK 0 THETA_NMP=100 THETA_CPU=150 B=5\nNMP,W,17\n";

    #[test]
    fn parses_small_file() {
        let (plan, traces) = parse_trace(SMALL).unwrap();
        assert_eq!(plan.k, 1024);
        assert_eq!(plan.blocks, vec![BlockSpec::new(100, 150, 5).unwrap()]);
        assert_eq!(traces.len(), 1);
        assert_eq!(traces[0].nmp_accesses[0].address, 17);
        assert_eq!(traces[0].nmp_accesses[0].kind, AccessKind::Write);
        assert!(traces[0].cpu_accesses.is_empty());
    }

    #[test]
    fn comments_blank_lines_and_spreading() {
        let text = "# trace\nK=64 N=2\n\nBLOCK 0 THETA_NMP=10 THETA_CPU=4 B=2 # first\n\
                    NMP,R,1\nNMP,R,2\nCPU,W,1\nBLOCK 1 THETA_NMP=4 THETA_CPU=4 B=1\nCPU,R,63\n";
        let (plan, traces) = parse_trace(text).unwrap();
        assert_eq!(plan.blocks.len(), 2);
        let seqs: Vec<u64> = traces[0].nmp_accesses.iter().map(|a| a.seq).collect();
        assert_eq!(seqs, vec![0, 5]);
        assert_eq!(traces[0].segment_of(5), 2);
        assert_eq!(traces[1].cpu_accesses[0].address, 63);
    }

    #[test]
    fn out_of_range_address_is_a_domain_error() {
        let text = "K=1024 N=1\nBLOCK 0 THETA_NMP=100 THETA_CPU=150 B=5\nNMP,W,1e9\n";
        match parse_trace(text) {
            Err(TraceError::Domain { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_has_no_blocks() {
        let err = parse_trace("").unwrap_err();
        assert!(matches!(err, TraceError::Structure { line: None, .. }));
        assert!(err.to_string().contains("no blocks"));
    }

    #[test]
    fn structural_and_parse_errors_name_lines() {
        let cases = [
            ("K=8 N=1\nNMP,R,1\n", 2),
            ("K=8 N=2\nBLOCK 1 THETA_NMP=4 THETA_CPU=4 B=1\n", 2),
            ("K=8 N=1\nBLOCK 0 THETA_NMP=4 THETA_CPU=4 B=1\nNMP,X,1\n", 3),
            ("K=8 N=1\nBLOCK 0 THETA_NMP=4 THETA_CPU=4 B=1\nNMP,R,abc\n", 3),
            ("N=1 K=8\n", 1),
        ];
        for (text, expect) in cases {
            let err = parse_trace(text).unwrap_err();
            assert!(
                err.to_string().starts_with(&format!("line {expect}:")),
                "{text:?} -> {err}"
            );
        }
        let err = parse_trace("K=8 N=2\nBLOCK 0 THETA_NMP=4 THETA_CPU=4 B=1\n").unwrap_err();
        assert!(err.to_string().contains("N=2"));
        let err =
            parse_trace("K=8 N=1\nBLOCK 0 THETA_NMP=1 THETA_CPU=4 B=1\nNMP,R,1\nNMP,R,2\n").unwrap_err();
        assert!(matches!(err, TraceError::Structure { line: Some(2), .. }));
    }

    #[test]
    fn load_reports_missing_path() {
        let err = load_trace_file("/definitely/not/here.trace").unwrap_err();
        assert!(matches!(err, TraceError::Io { .. }));
    }
}
