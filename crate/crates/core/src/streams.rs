//! Reproducible random streams.
//!
//! Every draw in the crate comes from a ChaCha8 generator keyed by
//! `(seed, block)` with the ChaCha stream id selecting what the draws are
//! for. Streams never overlap, so the NMP trace, the first CPU window and
//! each retry window are independent of one another and of draw order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    NmpTrace = 1,
    CpuTrace = 2,
    /// CPU accesses made while a retry is running; indexed by attempt.
    CpuRetry = 3,
    /// Stand-alone CPU windows.
    CpuWindow = 4,
}

const INDEX_BITS: u32 = 56;

pub fn stream(seed: u64, block: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << INDEX_BITS);
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&block.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}
