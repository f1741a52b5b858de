//! Hierarchical navigable small-world graph over inner-product similarity.
//!
//! Nodes are inserted in input order. Each node draws its top layer from a
//! geometric distribution with factor `1 / ln(M)`; at every layer it links to
//! the `M` most similar nodes found by a beam search of width
//! `ef_construction` (layer 0 allows `2 * M`). Overfull neighbour lists are
//! pruned back to their most similar entries.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{rank, Hit, IndexedCollection};
use crate::error::{Error, Result};
use crate::types::dot;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HnswParams {
    /// Maximum out-degree on the upper layers.
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    /// Seed for level assignment.
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            ef_search: 64,
            seed: 0x5EED,
        }
    }
}

impl HnswParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidConfig(format!(
                "hnsw graph degree must be at least 2, got {}",
                self.m
            )));
        }
        if self.ef_construction < 1 || self.ef_search < 1 {
            return Err(Error::InvalidConfig(format!(
                "hnsw ef parameters must be positive (ef_construction {}, ef_search {})",
                self.ef_construction, self.ef_search
            )));
        }
        Ok(())
    }

    fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.m
        } else {
            self.m
        }
    }
}

/// Heap entry ordered by score, ties resolved by node index.
#[derive(Debug, Clone, Copy)]
struct Scored(Hit);

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .score
            .total_cmp(&other.0.score)
            .then_with(|| other.0.node.cmp(&self.0.node))
    }
}

#[derive(Debug, Clone)]
pub(super) struct HnswGraph {
    params: HnswParams,
    /// `links[node][layer]` lists neighbour nodes.
    links: Vec<Vec<Vec<u32>>>,
    entry: usize,
    top_layer: usize,
}

struct Visited {
    marks: Vec<u32>,
    epoch: u32,
}

impl Visited {
    fn new(n: usize) -> Self {
        Self {
            marks: vec![0; n],
            epoch: 0,
        }
    }

    fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Returns true the first time `node` is seen since the last reset.
    fn insert(&mut self, node: usize) -> bool {
        if self.marks[node] == self.epoch {
            false
        } else {
            self.marks[node] = self.epoch;
            true
        }
    }
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl HnswGraph {
    pub(super) fn build(index: &IndexedCollection, params: &HnswParams) -> Self {
        let n = index.len();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let level_factor = 1.0 / libm::log(params.m as f64);
        let mut graph = Self {
            params: params.clone(),
            links: Vec::with_capacity(n),
            entry: 0,
            top_layer: 0,
        };
        let mut visited = Visited::new(n);

        for node in 0..n {
            // 1 - u lies in (0, 1], so the logarithm is finite.
            let level = libm::floor(-libm::log(1.0 - uniform01(&mut rng)) * level_factor) as usize;
            graph.links.push(vec![Vec::new(); level + 1]);
            if node == 0 {
                graph.top_layer = level;
                continue;
            }
            graph.insert(index, node, level, &mut visited);
            if level > graph.top_layer {
                graph.top_layer = level;
                graph.entry = node;
            }
        }
        graph
    }

    fn insert(&mut self, index: &IndexedCollection, node: usize, level: usize, visited: &mut Visited) {
        let query = index.row(node);
        let mut entry = self.entry;
        for layer in (level + 1..=self.top_layer).rev() {
            entry = self.greedy_step(index, query, entry, layer);
        }

        let mut entries = vec![entry];
        for layer in (0..=level.min(self.top_layer)).rev() {
            let found = self.search_layer(
                index,
                query,
                &entries,
                self.params.ef_construction,
                layer,
                visited,
            );
            let keep = self.params.m.min(found.len());
            let neighbours: Vec<u32> = found[..keep].iter().map(|h| h.node as u32).collect();
            for &other in &neighbours {
                self.connect(index, other as usize, node, layer);
            }
            self.links[node][layer] = neighbours;
            entries = found.iter().map(|h| h.node).collect();
        }
    }

    /// Adds `node` to `owner`'s list at `layer`, pruning to the most similar
    /// entries when the list overflows.
    fn connect(&mut self, index: &IndexedCollection, owner: usize, node: usize, layer: usize) {
        let cap = self.params.max_degree(layer);
        let list = &mut self.links[owner][layer];
        list.push(node as u32);
        if list.len() <= cap {
            return;
        }
        let base = index.row(owner);
        let mut scored: Vec<Hit> = list
            .iter()
            .map(|&n| Hit {
                node: n as usize,
                score: dot(base, index.row(n as usize)),
            })
            .collect();
        scored.sort_unstable_by_key(|&h| Reverse(Scored(h)));
        scored.truncate(cap);
        *list = scored.into_iter().map(|h| h.node as u32).collect();
    }

    fn greedy_step(&self, index: &IndexedCollection, query: &[f64], start: usize, layer: usize) -> usize {
        let mut best = start;
        let mut best_score = dot(query, index.row(start));
        loop {
            let mut improved = false;
            for &n in &self.links[best][layer] {
                let s = dot(query, index.row(n as usize));
                if s > best_score {
                    best_score = s;
                    best = n as usize;
                    improved = true;
                }
            }
            if !improved {
                return best;
            }
        }
    }

    /// Beam search on one layer; returns up to `ef` hits, best first.
    fn search_layer(
        &self,
        index: &IndexedCollection,
        query: &[f64],
        entries: &[usize],
        ef: usize,
        layer: usize,
        visited: &mut Visited,
    ) -> Vec<Hit> {
        visited.reset();
        let mut frontier: BinaryHeap<Scored> = BinaryHeap::new();
        let mut results: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
        for &e in entries {
            if visited.insert(e) {
                let hit = Hit {
                    node: e,
                    score: dot(query, index.row(e)),
                };
                frontier.push(Scored(hit));
                results.push(Reverse(Scored(hit)));
            }
        }
        while results.len() > ef {
            results.pop();
        }

        while let Some(Scored(current)) = frontier.pop() {
            let worst = results.peek().map_or(f64::NEG_INFINITY, |r| r.0 .0.score);
            if current.score < worst && results.len() >= ef {
                break;
            }
            for &n in &self.links[current.node][layer] {
                let n = n as usize;
                if !visited.insert(n) {
                    continue;
                }
                let hit = Hit {
                    node: n,
                    score: dot(query, index.row(n)),
                };
                let worst = results.peek().map_or(f64::NEG_INFINITY, |r| r.0 .0.score);
                if results.len() < ef || hit.score > worst {
                    frontier.push(Scored(hit));
                    results.push(Reverse(Scored(hit)));
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }

        let mut out: Vec<Hit> = results.into_iter().map(|r| r.0 .0).collect();
        out.sort_unstable_by_key(|&h| Reverse(Scored(h)));
        out
    }

    pub(super) fn search(
        &self,
        index: &IndexedCollection,
        query: &[f64],
        k: usize,
        exclude: Option<&str>,
    ) -> Vec<Hit> {
        let mut entry = self.entry;
        for layer in (1..=self.top_layer).rev() {
            entry = self.greedy_step(index, query, entry, layer);
        }
        let ef = self.params.ef_search.max(k + usize::from(exclude.is_some()));
        let mut visited = Visited::new(index.len());
        let mut found = self.search_layer(index, query, &[entry], ef, 0, &mut visited);
        if let Some(ex) = exclude {
            found.retain(|h| index.ids[h.node].as_str() != ex);
        }
        found.sort_by(|a, b| rank(index, b, a));
        found.truncate(k);
        found
    }

    #[cfg(test)]
    pub(super) fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.links.iter().enumerate().flat_map(|(node, layers)| {
            layers
                .iter()
                .enumerate()
                .flat_map(move |(layer, list)| list.iter().map(move |&n| (node, layer, n)))
        })
    }

    #[cfg(test)]
    pub(super) fn max_degree_observed(&self, layer: usize) -> usize {
        self.links
            .iter()
            .filter_map(|l| l.get(layer))
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }
}

impl IndexedCollection {
    #[cfg(test)]
    pub(super) fn graph(&self) -> Option<&HnswGraph> {
        match &self.backend {
            super::Backend::Hnsw(g) => Some(g),
            super::Backend::Exact => None,
        }
    }
}
