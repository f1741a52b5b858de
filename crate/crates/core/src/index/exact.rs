use alloc::vec::Vec;

use super::{rank, Hit, IndexedCollection};
use crate::types::dot;

/// Full scan keeping the best `k` by (score desc, id asc).
pub(super) fn top_k(
    index: &IndexedCollection,
    query: &[f64],
    k: usize,
    exclude: Option<&str>,
) -> Vec<Hit> {
    // Sorted best-first; k is small, so insertion beats a heap here.
    let mut best: Vec<Hit> = Vec::with_capacity(k + 1);
    for node in 0..index.len() {
        if exclude.is_some_and(|ex| index.ids[node].as_str() == ex) {
            continue;
        }
        let hit = Hit {
            node,
            score: dot(query, index.row(node)),
        };
        if best.len() == k && rank(index, &hit, &best[k - 1]).is_le() {
            continue;
        }
        let pos = best.partition_point(|b| rank(index, b, &hit).is_gt());
        best.insert(pos, hit);
        best.truncate(k);
    }
    best
}
