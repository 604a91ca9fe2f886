#![allow(dead_code)]

use rand::Rng;

use nmp_coherence::streams::{stream, Purpose};

/// Exact probability that `c` uniform draws from `k` addresses hit the set
/// left by `n` uniform draws, all with replacement. Recurses over the number
/// of distinct addresses among the first `n` draws.
pub fn exact_overlap_probability(k: u64, n: u64, c: u64) -> f64 {
    let kf = k as f64;
    let top = n.min(k) as usize;
    let mut dist = vec![0.0f64; top + 1];
    dist[0] = 1.0;
    for _ in 0..n {
        for d in (0..=top).rev() {
            let stay = dist[d] * d as f64 / kf;
            let grow = if d > 0 {
                dist[d - 1] * (kf - (d - 1) as f64) / kf
            } else {
                0.0
            };
            dist[d] = stay + grow;
        }
    }
    let miss: f64 = dist
        .iter()
        .enumerate()
        .map(|(d, &p)| p * (1.0 - d as f64 / kf).powi(c as i32))
        .sum();
    1.0 - miss
}

/// Monte-Carlo overlap frequency. A per-address stamp marks the NMP set of
/// the current trial so nothing is cleared between trials.
pub fn overlap_frequency(k: u64, n: u64, c: u64, trials: u64, seed: u64) -> f64 {
    let mut rng = stream(seed, k, Purpose::CpuWindow, n * 100_003 + c);
    let mut stamp = vec![0u32; k as usize];
    let mut hits = 0u64;
    for t in 1..=trials as u32 {
        for _ in 0..n {
            stamp[rng.gen_range(0..k) as usize] = t;
        }
        if (0..c).any(|_| stamp[rng.gen_range(0..k) as usize] == t) {
            hits += 1;
        }
    }
    hits as f64 / trials as f64
}
