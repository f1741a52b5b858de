//! Deterministic and uniform reference strategies over a materialized
//! candidate set.

use alloc::vec::Vec;
use core::borrow::Borrow;
use core::cmp::Ordering;

use crate::filter::FilterRng;
use crate::types::CandidatePair;

/// Offline optimum: the `B` heaviest candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Sorted by weight descending, then `r_id`, then `s_id` ascending.
    pub pairs: Vec<CandidatePair>,
    /// Sum of the selected weights.
    pub utility: f64,
}

/// Ranking used by the oracle: heavier first, ids ascending on ties.
pub fn oracle_order(a: &CandidatePair, b: &CandidatePair) -> Ordering {
    b.weight()
        .total_cmp(&a.weight())
        .then_with(|| a.r_id.cmp(&b.r_id))
        .then_with(|| a.s_id.cmp(&b.s_id))
}

pub fn oracle_top_b(candidates: &[CandidatePair], budget: usize) -> OracleResult {
    let pairs = top_b(candidates, budget);
    let utility = pairs.iter().map(CandidatePair::weight).sum();
    OracleResult { pairs, utility }
}

/// The `budget` best items in oracle order; generic so callers can carry
/// extra tags alongside each pair.
pub fn top_b<T: Borrow<CandidatePair> + Clone>(candidates: &[T], budget: usize) -> Vec<T> {
    let mut pairs = candidates.to_vec();
    pairs.sort_by(|a, b| oracle_order(a.borrow(), b.borrow()));
    pairs.truncate(budget);
    pairs
}

/// Every pair with `weight >= threshold`, in stream order. The count is
/// whatever the data yields.
pub fn threshold_filter<T: Borrow<CandidatePair> + Clone>(candidates: &[T], threshold: f64) -> Vec<T> {
    candidates
        .iter()
        .filter(|p| Borrow::<CandidatePair>::borrow(*p).weight() >= threshold)
        .cloned()
        .collect()
}

/// Independent selection of each pair with `p = min(1, B / n)`, one draw per
/// pair, in stream order.
pub fn uniform_sample<T: Borrow<CandidatePair> + Clone>(
    candidates: &[T],
    budget: usize,
    rng: &mut FilterRng,
) -> Vec<T> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let p = (budget as f64 / candidates.len() as f64).min(1.0);
    candidates
        .iter()
        .filter(|_| rng.uniform() < p)
        .cloned()
        .collect()
}
