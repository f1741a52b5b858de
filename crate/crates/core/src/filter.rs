//! The stochastic selection loop.
//!
//! Every candidate pair costs exactly one uniform draw: with
//! `p = min(1, alpha * w)` and `u` uniform on `[0, 1)`, the pair is selected
//! iff `u < p`. Selected pairs are handed to the sink immediately, so nothing
//! beyond the current entity's candidates is ever held.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`. A uniform variate takes the top 53 bits of
//! one `next_u64` output, scaled by `2^-53`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::controller::BudgetController;
use crate::types::{CandidatePair, SelectedPair};

/// Seeded generator that counts how many uniforms it has produced.
#[derive(Debug, Clone)]
pub struct FilterRng {
    inner: ChaCha8Rng,
    draw_count: u64,
}

impl FilterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            draw_count: 0,
        }
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.draw_count += 1;
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn draw_count(&self) -> u64 {
        self.draw_count
    }
}

/// Selection probability `min(1, alpha * weight)`.
#[inline]
pub fn selection_probability(alpha: f64, weight: f64) -> f64 {
    (alpha * weight).min(1.0)
}

/// One Bernoulli trial for `weight` at the controller's current alpha.
/// Records the selection on success.
#[inline]
pub fn filter_pair(weight: f64, controller: &mut BudgetController, rng: &mut FilterRng) -> bool {
    let p = selection_probability(controller.alpha(), weight);
    let selected = rng.uniform() < p;
    if selected {
        controller.record_selection();
    }
    selected
}

/// Streaming driver: feed it each query entity's candidates in stream order.
#[derive(Debug, Clone)]
pub struct SperStream {
    controller: BudgetController,
    rng: FilterRng,
    emitted: usize,
    queries: usize,
    pairs_seen: u64,
}

impl SperStream {
    pub fn new(controller: BudgetController, seed: u64) -> Self {
        Self {
            controller,
            rng: FilterRng::new(seed),
            emitted: 0,
            queries: 0,
            pairs_seen: 0,
        }
    }

    /// Filters the candidates of the next query entity, in the order given,
    /// and closes the entity on the controller.
    pub fn process_entity<I, F>(&mut self, candidates: I, mut emit: F)
    where
        I: IntoIterator<Item = CandidatePair>,
        F: FnMut(SelectedPair),
    {
        let query_index = self.queries;
        for pair in candidates {
            self.pairs_seen += 1;
            if filter_pair(pair.weight(), &mut self.controller, &mut self.rng) {
                emit(SelectedPair {
                    pair,
                    emit_index: self.emitted,
                    query_index,
                });
                self.emitted += 1;
            }
        }
        self.controller.end_entity();
        self.queries += 1;
    }

    /// Same as [`process_entity`](Self::process_entity) for bare weights;
    /// returns how many were selected. Used by weight-only workloads.
    pub fn process_weights(&mut self, weights: &[f64]) -> usize {
        let mut selected = 0;
        for &w in weights {
            self.pairs_seen += 1;
            if filter_pair(w, &mut self.controller, &mut self.rng) {
                selected += 1;
            }
        }
        self.emitted += selected;
        self.controller.end_entity();
        self.queries += 1;
        selected
    }

    pub fn controller(&self) -> &BudgetController {
        &self.controller
    }

    pub fn draw_count(&self) -> u64 {
        self.rng.draw_count()
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn pairs_seen(&self) -> u64 {
        self.pairs_seen
    }

    pub fn into_controller(self) -> BudgetController {
        self.controller
    }
}
