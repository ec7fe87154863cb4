//! Dynamic-graph random walks driven by parallel weighted reservoir sampling.
//!
//! Transition weights are computed at every step from the graph and the walk
//! state, and sampled with constant auxiliary state per query. The crate
//! provides CSR graph storage, counter-based random streams, the samplers and
//! their baselines, four walk applications, a multi-worker execution engine
//! and the statistics used to verify sampling correctness.

pub mod apps;
pub mod bench;
pub mod engine;
pub mod graph;
pub mod rng;
pub mod samplers;
pub mod stats;
pub mod verify;
