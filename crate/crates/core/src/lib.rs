//! Stochastic budgeted prioritization for progressive entity resolution.
//!
//! Every query entity retrieves its top-k neighbours from an index over the
//! other collection. Each retrieved pair then gets exactly one Bernoulli trial
//! with probability `min(1, alpha * weight)`, and selected pairs are emitted
//! immediately. A windowed multiplicative controller keeps the expected number
//! of selected pairs at the budget `B = rho * k * |S|` without ever sorting or
//! materializing the candidate set.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, timing, synthetic
//! workloads and the command line live in the `sper` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod controller;
pub mod embed;
mod error;
pub mod filter;
pub mod index;
pub mod metrics;
pub mod types;

pub use controller::{ideal_alpha, BudgetController, ALPHA_MIN};
pub use embed::{HashEmbedder, HashEmbedderConfig};
pub use error::{Error, Result};
pub use filter::{filter_pair, FilterRng, SperStream};
pub use metrics::{PhaseTimings, RunMetrics, TruthSet};
pub use index::{HnswParams, IndexedCollection};
pub use types::{
    CandidatePair, EmbedderKind, EmbeddingVector, EntityId, EntityRecord, IndexKind, Mode, RunConfig,
    SelectedPair,
};
