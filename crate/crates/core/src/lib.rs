//! Trace-driven epoch simulator and matching closed-form timing models for
//! keeping a near-memory processor (NMP) coherent with a host CPU.
//!
//! Three strategies are modelled:
//!
//! * fine-grained coherence, where every shared NMP access pays a round trip;
//! * CONDA-style speculation, where the NMP runs a whole offloaded block,
//!   sends a signature of its addresses and re-runs the block on conflict;
//! * MRCN, which adds breakpoints inside the block and rolls back only to
//!   the first conflicting segment.
//!
//! [`analytics`] holds the expected-time formulas, [`engine`] the
//! simulator, [`workload`] and [`protocol`] the traces and coherence
//! messages it runs on, and [`harness`] the sweeps and reports that compare
//! the two.

pub mod analytics;
pub mod engine;
pub mod harness;
pub mod protocol;
pub mod stats;
pub mod streams;
pub mod workload;

pub use analytics::{BlockSpec, CoherenceModel, ExpectedTime, ModelError, SystemParams};
pub use engine::{BlockReport, RunReport, Strategy, StrategyConfig};
pub use protocol::{ConflictMode, ConflictReport, CpuWriteLog, Signature, SignatureConfig, SignatureMode};
pub use workload::{Access, AccessKind, EpochTrace, OffloadPlan, Side};
