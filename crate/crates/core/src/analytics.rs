//! Closed-form expected execution time for speculative NMP offload under
//! full-block rollback (CONDA) and breakpoint rollback (MRCN).
//!
//! Everything here is a pure function of its value inputs. Set sizes are
//! kept real-valued: `f * theta` need not be integral and the conflict
//! probability is evaluated with real exponents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// NMP core clock (Hz) used to derive the default CPU instruction cost.
pub const NMP_CLOCK_HZ: f64 = 2.0e9;
/// Host CPU clock (Hz).
pub const CPU_CLOCK_HZ: f64 = 3.0e9;

pub const DEFAULT_K: u64 = 4096;
pub const DEFAULT_T_INST: f64 = 1.0;
pub const DEFAULT_T_TRAN: f64 = 50.0;
pub const DEFAULT_T_COMMIT: f64 = 8.0;
/// CPU cycles per instruction expressed in NMP cycles (2 GHz / 3 GHz).
pub const DEFAULT_T_CPU: f64 = DEFAULT_T_INST * NMP_CLOCK_HZ / CPU_CLOCK_HZ;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    Domain { name: &'static str, reason: String },
    #[error("{name} index {index} out of range {lo}..={hi}")]
    Index {
        name: &'static str,
        index: u32,
        lo: u32,
        hi: u32,
    },
    #[error("offload plan has no blocks")]
    EmptyPlan,
}

fn domain(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Domain {
        name,
        reason: reason.into(),
    }
}

/// Shared-space size, access fractions and timing constants. All times are
/// in NMP cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of addressable locations in the shared segment.
    pub k: u64,
    pub f_cpu: f64,
    pub f_nmp: f64,
    /// NMP cycles per instruction.
    pub t_inst: f64,
    /// Signature send plus conflict report round trip.
    pub t_tran: f64,
    pub t_commit: f64,
    /// CPU cycles per instruction, in NMP cycles.
    pub t_cpu: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            k: DEFAULT_K,
            f_cpu: 0.5,
            f_nmp: 0.5,
            t_inst: DEFAULT_T_INST,
            t_tran: DEFAULT_T_TRAN,
            t_commit: DEFAULT_T_COMMIT,
            t_cpu: DEFAULT_T_CPU,
        }
    }
}

impl SystemParams {
    pub fn with_fractions(f_nmp: f64, f_cpu: f64) -> Result<Self, ModelError> {
        SystemParams {
            f_nmp,
            f_cpu,
            ..Default::default()
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, ModelError> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.k == 0 {
            return Err(domain("k", "must be at least 1"));
        }
        for (name, f) in [("f_cpu", self.f_cpu), ("f_nmp", self.f_nmp)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(domain(name, format!("{f} not in [0, 1]")));
            }
        }
        for (name, t) in [
            ("t_inst", self.t_inst),
            ("t_tran", self.t_tran),
            ("t_cpu", self.t_cpu),
        ] {
            if !(t.is_finite() && t > 0.0) {
                return Err(domain(name, format!("{t} must be finite and > 0")));
            }
        }
        if !(self.t_commit.is_finite() && self.t_commit >= 0.0) {
            return Err(domain(
                "t_commit",
                format!("{} must be finite and >= 0", self.t_commit),
            ));
        }
        Ok(())
    }
}

/// One offloaded block: its instruction count, the CPU instructions that
/// overlap its epoch, and the number of rollback segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockSpec {
    pub theta_nmp: u64,
    pub theta_cpu: u64,
    pub breakpoints: u32,
}

impl BlockSpec {
    pub fn new(theta_nmp: u64, theta_cpu: u64, breakpoints: u32) -> Result<Self, ModelError> {
        let block = BlockSpec {
            theta_nmp,
            theta_cpu,
            breakpoints,
        };
        block.validate()?;
        Ok(block)
    }

    /// Block whose CPU instruction count is the number of CPU instructions
    /// that fit into one NMP epoch, `round(alpha / t_cpu)`.
    pub fn with_epoch_cpu(
        params: &SystemParams,
        theta_nmp: u64,
        breakpoints: u32,
    ) -> Result<Self, ModelError> {
        let alpha = theta_nmp as f64 * params.t_inst + params.t_tran;
        let theta_cpu = (alpha / params.t_cpu).round() as u64;
        Self::new(theta_nmp, theta_cpu, breakpoints)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.theta_nmp == 0 {
            return Err(domain("theta_nmp", "must be at least 1"));
        }
        if self.breakpoints == 0 {
            return Err(domain("breakpoints", "must be at least 1"));
        }
        Ok(())
    }
}

/// Which closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoherenceModel {
    Conda,
    Mrcn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedTime {
    pub cycles: f64,
    pub per_block: Vec<f64>,
}

/// `(|N_i|, |C_i|) = (f_nmp * theta_nmp, f_cpu * theta_cpu)`.
pub fn access_set_sizes(params: &SystemParams, block: &BlockSpec) -> (f64, f64) {
    (
        params.f_nmp * block.theta_nmp as f64,
        params.f_cpu * block.theta_cpu as f64,
    )
}

/// Probability that two uniform access streams of sizes `n_size` and
/// `c_size` over `k` locations share at least one location, in the
/// per-location independence form
/// `1 - [1 - (1 - q^n)(1 - q^c)]^k` with `q = 1 - 1/k`.
///
/// Every power is taken in log space so large `k` and large sizes neither
/// underflow nor lose the small differences from one.
pub fn conflict_probability(k: u64, n_size: f64, c_size: f64) -> Result<f64, ModelError> {
    if k == 0 {
        return Err(domain("k", "must be at least 1"));
    }
    if !(n_size >= 0.0 && c_size >= 0.0) {
        return Err(domain("set size", format!("({n_size}, {c_size}) must be >= 0")));
    }
    if n_size == 0.0 || c_size == 0.0 {
        return Ok(0.0);
    }
    if k == 1 {
        // q = 0: the single location is touched by both sides.
        return Ok(1.0);
    }
    let k_f = k as f64;
    let ln_q = (-1.0 / k_f).ln_1p();
    let touched_nmp = -(n_size * ln_q).exp_m1();
    let touched_cpu = -(c_size * ln_q).exp_m1();
    let both = touched_nmp * touched_cpu;
    if both >= 1.0 {
        return Ok(1.0);
    }
    let p = -(k_f * (-both).ln_1p()).exp_m1();
    Ok(p.clamp(0.0, 1.0))
}

/// `alpha = theta_nmp * t_inst + t_tran`: one speculative pass plus its
/// validation round trip.
pub fn alpha(params: &SystemParams, block: &BlockSpec) -> f64 {
    block.theta_nmp as f64 * params.t_inst + params.t_tran
}

pub fn conda_time_no_conflict(params: &SystemParams, block: &BlockSpec) -> f64 {
    alpha(params, block) + params.t_commit
}

/// Expected block time for a given conflict probability, `alpha (1 + p) + t_commit`.
pub fn conda_time_at(params: &SystemParams, block: &BlockSpec, p: f64) -> f64 {
    alpha(params, block) * (1.0 + p) + params.t_commit
}

pub fn conda_conflict_probability(
    params: &SystemParams,
    block: &BlockSpec,
) -> Result<f64, ModelError> {
    let (n, c) = access_set_sizes(params, block);
    conflict_probability(params.k, n, c)
}

pub fn conda_expected_block_time(
    params: &SystemParams,
    block: &BlockSpec,
) -> Result<f64, ModelError> {
    let p = conda_conflict_probability(params, block)?;
    Ok(conda_time_at(params, block, p))
}

fn check_range(name: &'static str, index: u32, lo: u32, hi: u32) -> Result<(), ModelError> {
    if index < lo || index > hi {
        return Err(ModelError::Index { name, index, lo, hi });
    }
    Ok(())
}

/// Conflict probability of one segment (1-based `j`). The NMP set is split
/// evenly over the `b` segments while the CPU set is the whole epoch's, so
/// the value is the same for every `j`.
pub fn mrcn_segment_conflict_prob(
    params: &SystemParams,
    block: &BlockSpec,
    j: u32,
) -> Result<f64, ModelError> {
    check_range("segment", j, 1, block.breakpoints)?;
    let (n, c) = access_set_sizes(params, block);
    conflict_probability(params.k, n / block.breakpoints as f64, c)
}

/// Cost of re-executing from breakpoint `k` (0-based) to the end of the
/// block, plus one validation round trip:
/// `(b - k) * theta_nmp * t_inst / b + t_tran`.
pub fn beta(params: &SystemParams, block: &BlockSpec, k: u32) -> Result<f64, ModelError> {
    let b = block.breakpoints;
    check_range("breakpoint", k, 0, b - 1)?;
    Ok((b - k) as f64 * block.theta_nmp as f64 * params.t_inst / b as f64 + params.t_tran)
}

/// Conflict probability of a re-execution that restarted at breakpoint `j`
/// and next rolls back to `k` (`j <= k <= b - 1`). The CPU set is what the
/// CPU touches while the re-execution runs, `beta_j * f_cpu / t_cpu`.
///
/// Exposed for analysis only; the closed form in
/// [`mrcn_expected_block_time`] is first order and does not use it.
pub fn mrcn_reexec_conflict_prob(
    params: &SystemParams,
    block: &BlockSpec,
    j: u32,
    k: u32,
) -> Result<f64, ModelError> {
    let b = block.breakpoints;
    check_range("breakpoint", j, 0, b - 1)?;
    check_range("breakpoint", k, j, b - 1)?;
    let (n, _) = access_set_sizes(params, block);
    let c_k = beta(params, block, j)? * params.f_cpu / params.t_cpu;
    conflict_probability(params.k, n / b as f64, c_k)
}

/// `alpha + t_commit + sum_{j=1..b} P_j * beta_{j-1}`.
pub fn mrcn_expected_block_time(
    params: &SystemParams,
    block: &BlockSpec,
) -> Result<f64, ModelError> {
    let mut extra = 0.0;
    for j in 1..=block.breakpoints {
        extra += mrcn_segment_conflict_prob(params, block, j)? * beta(params, block, j - 1)?;
    }
    Ok(alpha(params, block) + params.t_commit + extra)
}

pub fn expected_block_time(
    params: &SystemParams,
    block: &BlockSpec,
    model: CoherenceModel,
) -> Result<f64, ModelError> {
    match model {
        CoherenceModel::Conda => conda_expected_block_time(params, block),
        CoherenceModel::Mrcn => mrcn_expected_block_time(params, block),
    }
}

/// Sum of per-block expectations over an offload plan.
pub fn total_expected_time(
    params: &SystemParams,
    blocks: &[BlockSpec],
    model: CoherenceModel,
) -> Result<ExpectedTime, ModelError> {
    if blocks.is_empty() {
        return Err(ModelError::EmptyPlan);
    }
    params.validate()?;
    let per_block = blocks
        .iter()
        .map(|b| {
            b.validate()?;
            expected_block_time(params, b, model)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExpectedTime {
        cycles: per_block.iter().sum(),
        per_block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(f_nmp: f64, f_cpu: f64, t_tran: f64) -> SystemParams {
        SystemParams {
            k: 1024,
            f_nmp,
            f_cpu,
            t_inst: 1.0,
            t_tran,
            t_commit: 8.0,
            t_cpu: 2.0 / 3.0,
        }
    }

    #[test]
    fn set_sizes_are_plain_products() {
        let p = params(0.5, 0.5, 50.0);
        assert_eq!(access_set_sizes(&p, &BlockSpec::new(100, 100, 1).unwrap()), (50.0, 50.0));
        let p = params(0.0, 0.5, 50.0);
        assert_eq!(access_set_sizes(&p, &BlockSpec::new(500, 10, 1).unwrap()), (0.0, 5.0));
        let p = params(0.3, 0.5, 50.0);
        let (n, c) = access_set_sizes(&p, &BlockSpec::new(500, 750, 1).unwrap());
        assert!((n - 150.0).abs() < 1e-9 && c == 375.0);
    }

    #[test]
    fn conflict_probability_edges() {
        assert_eq!(conflict_probability(1024, 0.0, 50.0).unwrap(), 0.0);
        assert_eq!(conflict_probability(1024, 50.0, 0.0).unwrap(), 0.0);
        assert_eq!(conflict_probability(1, 1.0, 1.0).unwrap(), 1.0);
        assert!(matches!(
            conflict_probability(0, 1.0, 1.0),
            Err(ModelError::Domain { .. })
        ));
    }

    #[test]
    fn conflict_probability_matches_direct_power_form() {
        // Direct evaluation is fine at these magnitudes.
        let k = 1024.0_f64;
        let q: f64 = 1.0 - 1.0 / k;
        let direct = 1.0 - (1.0 - (1.0 - q.powf(50.0)) * (1.0 - q.powf(50.0))).powf(k);
        let p = conflict_probability(1024, 50.0, 50.0).unwrap();
        assert!((p - direct).abs() < 1e-12);
        assert!((p - 0.902_742_211_219_737_9).abs() < 1e-12);
    }

    #[test]
    fn conflict_probability_is_stable_for_huge_k() {
        let p = conflict_probability(1 << 40, 10.0, 10.0).unwrap();
        // ~ n c / K
        let approx = 100.0 / (1u64 << 40) as f64;
        assert!((p / approx - 1.0).abs() < 1e-6, "{p} vs {approx}");
    }

    #[test]
    fn no_conflict_time() {
        let p = params(0.5, 0.5, 50.0);
        let b = BlockSpec::new(100, 100, 1).unwrap();
        assert_eq!(conda_time_no_conflict(&p, &b), 158.0);
        let p = params(0.5, 0.5, 40.0);
        let b = BlockSpec::new(500, 100, 1).unwrap();
        assert_eq!(conda_time_no_conflict(&p, &b), 548.0);
        assert!(params(0.5, 0.5, 0.0).validate().is_err());
    }

    #[test]
    fn conda_expectation_spans_eq5_to_eq6() {
        let p = params(0.5, 0.5, 50.0);
        let b = BlockSpec::new(100, 100, 1).unwrap();
        assert_eq!(conda_time_at(&p, &b, 0.0), 158.0);
        assert_eq!(conda_time_at(&p, &b, 1.0), 308.0);
        let pc = conflict_probability(1024, 50.0, 50.0).unwrap();
        let e = conda_expected_block_time(&p, &b).unwrap();
        assert!((e - (150.0 * (1.0 + pc) + 8.0)).abs() < 1e-9);
    }

    #[test]
    fn beta_values() {
        let p = params(0.5, 0.5, 50.0);
        let b = BlockSpec::new(100, 100, 5).unwrap();
        assert_eq!(beta(&p, &b, 0).unwrap(), alpha(&p, &b));
        assert_eq!(beta(&p, &b, 0).unwrap(), 150.0);
        assert_eq!(beta(&p, &b, 4).unwrap(), 70.0);
        assert!(beta(&p, &b, 5).is_err());
        let p = params(0.5, 0.5, 40.0);
        let b = BlockSpec::new(500, 100, 5).unwrap();
        assert_eq!(beta(&p, &b, 2).unwrap(), 340.0);
    }

    #[test]
    fn segment_probability() {
        let p = params(0.5, 0.5, 50.0);
        let b1 = BlockSpec::new(100, 100, 1).unwrap();
        assert_eq!(
            mrcn_segment_conflict_prob(&p, &b1, 1).unwrap(),
            conda_conflict_probability(&p, &b1).unwrap()
        );
        let b5 = BlockSpec::new(100, 100, 5).unwrap();
        for j in 1..=5 {
            assert_eq!(
                mrcn_segment_conflict_prob(&p, &b5, j).unwrap(),
                conflict_probability(1024, 10.0, 50.0).unwrap()
            );
        }
        assert!(mrcn_segment_conflict_prob(&p, &b5, 0).is_err());
        assert!(mrcn_segment_conflict_prob(&p, &b5, 6).is_err());
        let p0 = params(0.0, 0.5, 50.0);
        assert_eq!(mrcn_segment_conflict_prob(&p0, &b5, 3).unwrap(), 0.0);
    }

    #[test]
    fn reexec_probability() {
        let p = params(0.5, 0.5, 50.0);
        let b5 = BlockSpec::new(100, 100, 5).unwrap();
        let v = mrcn_reexec_conflict_prob(&p, &b5, 2, 3).unwrap();
        let c: f64 = 110.0 * 0.5 / (2.0 / 3.0);
        assert!((c - 82.5).abs() < 1e-12);
        assert_eq!(v, conflict_probability(1024, 10.0, c).unwrap());
        assert!(mrcn_reexec_conflict_prob(&p, &b5, 3, 2).is_err());
        assert!(mrcn_reexec_conflict_prob(&p, &b5, 2, 5).is_err());

        let b1 = BlockSpec::new(100, 100, 1).unwrap();
        let v = mrcn_reexec_conflict_prob(&p, &b1, 0, 0).unwrap();
        let c = alpha(&p, &b1) * 0.5 / p.t_cpu;
        assert_eq!(v, conflict_probability(1024, 50.0, c).unwrap());

        let pz = params(0.5, 0.0, 50.0);
        assert_eq!(mrcn_reexec_conflict_prob(&pz, &b5, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn mrcn_reduces_to_conda_with_one_segment() {
        let p = params(0.7, 0.5, 50.0);
        let b = BlockSpec::new(250, 300, 1).unwrap();
        let m = mrcn_expected_block_time(&p, &b).unwrap();
        let c = conda_expected_block_time(&p, &b).unwrap();
        assert!(((m - c) / c).abs() < 1e-12);
    }

    #[test]
    fn mrcn_worked_value() {
        let p = params(0.5, 0.5, 50.0);
        let b = BlockSpec::new(100, 100, 5).unwrap();
        let pj = conflict_probability(1024, 10.0, 50.0).unwrap();
        let expect = 158.0 + pj * (150.0 + 130.0 + 110.0 + 90.0 + 70.0);
        assert!((mrcn_expected_block_time(&p, &b).unwrap() - expect).abs() < 1e-9);
        let p0 = params(0.0, 0.5, 50.0);
        assert_eq!(mrcn_expected_block_time(&p0, &b).unwrap(), 158.0);
    }

    #[test]
    fn totals() {
        let p = params(0.5, 0.5, 50.0);
        let b = BlockSpec::new(100, 100, 5).unwrap();
        let one = total_expected_time(&p, &[b], CoherenceModel::Mrcn).unwrap();
        assert_eq!(one.cycles, mrcn_expected_block_time(&p, &b).unwrap());
        let ten = total_expected_time(&p, &[b; 10], CoherenceModel::Mrcn).unwrap();
        assert!((ten.cycles - 10.0 * one.cycles).abs() < 1e-9);
        assert_eq!(ten.per_block.len(), 10);

        let mixed = [
            BlockSpec::new(100, 225, 1).unwrap(),
            BlockSpec::new(500, 825, 1).unwrap(),
        ];
        let t = total_expected_time(&p, &mixed, CoherenceModel::Conda).unwrap();
        let a = conda_expected_block_time(&p, &mixed[0]).unwrap();
        let c = conda_expected_block_time(&p, &mixed[1]).unwrap();
        assert_eq!(t.cycles, a + c);
        assert_eq!(
            total_expected_time(&p, &[], CoherenceModel::Conda),
            Err(ModelError::EmptyPlan)
        );
    }

    #[test]
    fn default_cpu_instruction_count() {
        let p = SystemParams::default();
        let b = BlockSpec::with_epoch_cpu(&p, 100, 5).unwrap();
        // alpha = 150 NMP cycles, 1.5 CPU instructions per NMP cycle.
        assert_eq!(b.theta_cpu, 225);
        let b = BlockSpec::with_epoch_cpu(&p, 500, 5).unwrap();
        assert_eq!(b.theta_cpu, 825);
    }
}
