//! NMP-to-CPU coherence messages: the address signature the NMP sends at
//! the end of an epoch, the CPU-side access log it is checked against, and
//! rollback point selection.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::workload::AccessKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignatureMode {
    ExactSet,
    Bloom,
}

impl FromStr for SignatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "exact" | "exact_set" => Ok(SignatureMode::ExactSet),
            "bloom" => Ok(SignatureMode::Bloom),
            _ => Err(format!("unknown signature mode `{s}` (exact_set, bloom)")),
        }
    }
}

impl fmt::Display for SignatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignatureMode::ExactSet => "exact_set",
            SignatureMode::Bloom => "bloom",
        })
    }
}

/// Which CPU/NMP access pairs count as a conflict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConflictMode {
    /// Any address touched by both sides.
    AddressOverlap,
    /// CPU read vs NMP write and CPU write vs NMP read are exempt.
    RwAware,
}

impl FromStr for ConflictMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "address_overlap" | "overlap" => Ok(ConflictMode::AddressOverlap),
            "rw_aware" | "rw" => Ok(ConflictMode::RwAware),
            _ => Err(format!("unknown conflict mode `{s}` (address_overlap, rw_aware)")),
        }
    }
}

impl fmt::Display for ConflictMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictMode::AddressOverlap => "address_overlap",
            ConflictMode::RwAware => "rw_aware",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignatureConfig {
    pub mode: SignatureMode,
    pub bits_per_elem: f64,
    pub hashes: u32,
}

impl Default for SignatureConfig {
    fn default() -> Self {
        SignatureConfig {
            mode: SignatureMode::ExactSet,
            bits_per_elem: 9.6,
            hashes: 7,
        }
    }
}

impl SignatureConfig {
    pub fn bloom() -> Self {
        SignatureConfig {
            mode: SignatureMode::Bloom,
            ..Default::default()
        }
    }
}

/// Minimum segment tag per access kind; 0 means absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct KindTags {
    read: u32,
    write: u32,
}

fn min_tag(current: u32, tag: u32) -> u32 {
    if current == 0 {
        tag
    } else {
        current.min(tag)
    }
}

impl KindTags {
    fn record(&mut self, kind: AccessKind, tag: u32) {
        match kind {
            AccessKind::Read => self.read = min_tag(self.read, tag),
            AccessKind::Write => self.write = min_tag(self.write, tag),
        }
    }

    fn any(&self) -> u32 {
        match (self.read, self.write) {
            (0, w) => w,
            (r, 0) => r,
            (r, w) => r.min(w),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(m: usize) -> Self {
        Bits(vec![0; m.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }
}

/// Bloom signature. `all` answers address membership; `reads` and `writes`
/// share its hash positions and serve the read/write-aware mode. Segment
/// tags sit in a parallel array indexed by the first hash position.
#[derive(Debug, Clone, PartialEq)]
struct BloomSig {
    m: usize,
    hashes: u32,
    all: Bits,
    reads: Bits,
    writes: Bits,
    tags: Vec<u32>,
}

impl BloomSig {
    fn positions(&self, address: u64) -> impl Iterator<Item = usize> {
        let h1 = splitmix64(address);
        let h2 = splitmix64(address ^ 0xA076_1D64_78BD_642F) | 1;
        let m = self.m as u64;
        (0..self.hashes as u64).map(move |i| (h1.wrapping_add(i.wrapping_mul(h2)) % m) as usize)
    }

    fn insert(&mut self, address: u64, kind: AccessKind, tag: u32) {
        let mut first = true;
        for pos in self.positions(address) {
            if first {
                self.tags[pos] = min_tag(self.tags[pos], tag);
                first = false;
            }
            self.all.set(pos);
            match kind {
                AccessKind::Read => self.reads.set(pos),
                AccessKind::Write => self.writes.set(pos),
            }
        }
    }

    fn probe(&self, address: u64, filter: &Bits) -> Option<u32> {
        let mut first = None;
        for pos in self.positions(address) {
            if !filter.get(pos) {
                return None;
            }
            first.get_or_insert(pos);
        }
        // An untagged slot means every element that set this bit did so
        // through a later hash; roll back to the start.
        first.map(|pos| match self.tags[pos] {
            0 => 1,
            t => t,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Members {
    Exact(FxHashMap<u64, KindTags>),
    Bloom(BloomSig),
}

/// Addresses the NMP touched during one epoch, each tagged with the
/// earliest segment (1-based) that touched it.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    segments: u32,
    members: Members,
}

impl Signature {
    pub fn exact(segments: u32) -> Self {
        assert!(segments >= 1, "a signature needs at least one segment");
        Signature {
            segments,
            members: Members::Exact(FxHashMap::default()),
        }
    }

    /// Bloom signature sized for `expected` insertions: `m =
    /// ceil(bits_per_elem * expected)` bits and `hashes` hash functions.
    pub fn bloom(segments: u32, expected: usize, bits_per_elem: f64, hashes: u32) -> Self {
        assert!(segments >= 1, "a signature needs at least one segment");
        let m = ((bits_per_elem * expected as f64).ceil() as usize).max(1);
        Signature {
            segments,
            members: Members::Bloom(BloomSig {
                m,
                hashes: hashes.max(1),
                all: Bits::new(m),
                reads: Bits::new(m),
                writes: Bits::new(m),
                tags: vec![0; m],
            }),
        }
    }

    pub fn with_config(config: &SignatureConfig, segments: u32, expected: usize) -> Self {
        match config.mode {
            SignatureMode::ExactSet => Self::exact(segments),
            SignatureMode::Bloom => {
                Self::bloom(segments, expected, config.bits_per_elem, config.hashes)
            }
        }
    }

    pub fn segments(&self) -> u32 {
        self.segments
    }

    pub fn mode(&self) -> SignatureMode {
        match self.members {
            Members::Exact(_) => SignatureMode::ExactSet,
            Members::Bloom(_) => SignatureMode::Bloom,
        }
    }

    /// Bit count of a bloom signature.
    pub fn bloom_bits(&self) -> Option<usize> {
        match &self.members {
            Members::Bloom(b) => Some(b.m),
            Members::Exact(_) => None,
        }
    }

    pub fn insert(&mut self, address: u64, kind: AccessKind, segment: u32) {
        assert!(
            (1..=self.segments).contains(&segment),
            "segment {segment} outside 1..={}",
            self.segments
        );
        match &mut self.members {
            Members::Exact(map) => map.entry(address).or_default().record(kind, segment),
            Members::Bloom(b) => b.insert(address, kind, segment),
        }
    }

    pub fn contains(&self, address: u64) -> bool {
        self.segment_of(address).is_some()
    }

    /// Earliest segment tag recorded for `address`, if it is a member.
    pub fn segment_of(&self, address: u64) -> Option<u32> {
        match &self.members {
            Members::Exact(map) => map.get(&address).map(KindTags::any),
            Members::Bloom(b) => b.probe(address, &b.all),
        }
    }

    /// Segment at which a CPU access conflicts with this signature.
    pub fn conflict_segment(&self, address: u64, cpu_kind: AccessKind, mode: ConflictMode) -> Option<u32> {
        match mode {
            ConflictMode::AddressOverlap => self.segment_of(address),
            ConflictMode::RwAware => match &self.members {
                Members::Exact(map) => {
                    let tags = map.get(&address)?;
                    let tag = match cpu_kind {
                        AccessKind::Read => tags.read,
                        AccessKind::Write => tags.write,
                    };
                    (tag != 0).then_some(tag)
                }
                Members::Bloom(b) => match cpu_kind {
                    AccessKind::Read => b.probe(address, &b.reads),
                    AccessKind::Write => b.probe(address, &b.writes),
                },
            },
        }
    }
}

/// Shared-space accesses the CPU made since the last validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CpuWriteLog {
    entries: Vec<(u64, AccessKind)>,
}

impl CpuWriteLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, address: u64, kind: AccessKind) {
        self.entries.push((address, kind));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, AccessKind)] {
        &self.entries
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

impl Extend<(u64, AccessKind)> for CpuWriteLog {
    fn extend<T: IntoIterator<Item = (u64, AccessKind)>>(&mut self, iter: T) {
        self.entries.extend(iter);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictReport {
    /// Sorted, deduplicated.
    pub conflicting_addresses: Vec<u64>,
    pub first_conflict_segment: Option<u32>,
}

impl ConflictReport {
    pub fn has_conflict(&self) -> bool {
        self.first_conflict_segment.is_some()
    }
}

/// Lowest-numbered (1-based) set flag.
pub fn priority_encode(segment_flags: &[bool]) -> Option<u32> {
    segment_flags
        .iter()
        .position(|&f| f)
        .map(|i| i as u32 + 1)
}

/// Check the CPU log against the NMP signature and clear the log.
pub fn validate(sig: &Signature, log: &mut CpuWriteLog, mode: ConflictMode) -> ConflictReport {
    let mut flags = vec![false; sig.segments as usize];
    let mut conflicting = Vec::new();
    for (address, kind) in log.entries.drain(..) {
        if let Some(seg) = sig.conflict_segment(address, kind, mode) {
            flags[seg as usize - 1] = true;
            conflicting.push(address);
        }
    }
    conflicting.sort_unstable();
    conflicting.dedup();
    ConflictReport {
        conflicting_addresses: conflicting,
        first_conflict_segment: priority_encode(&flags),
    }
}

/// Earliest conflicting segment among `accesses`, never below `floor`.
/// Stops reading once `floor` itself is hit, as nothing later can beat it.
pub fn earliest_conflict(
    sig: &Signature,
    accesses: impl IntoIterator<Item = (u64, AccessKind)>,
    mode: ConflictMode,
    floor: u32,
) -> Option<u32> {
    let mut best: Option<u32> = None;
    for (address, kind) in accesses {
        if let Some(seg) = sig.conflict_segment(address, kind, mode) {
            let seg = seg.max(floor);
            if seg == floor {
                return Some(seg);
            }
            best = Some(best.map_or(seg, |b| b.min(seg)));
        }
    }
    best
}

/// `(1 - e^{-k n / m})^k`.
pub fn bloom_false_positive_rate(n: usize, m: usize, k: u32) -> f64 {
    let k = k as f64;
    (1.0 - (-k * n as f64 / m as f64).exp()).powf(k)
}
