//! Top-k maximum-inner-product retrieval over the indexed collection R.
//!
//! Two backends share one surface: an exact scan, which is the reference for
//! every correctness check, and a hierarchical navigable small-world graph.
//! Returned weights are raw inner products clamped to `[0, 1]`.

mod exact;
mod hnsw;

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::types::{clamp_weight, EmbeddingVector, EntityId, IndexKind};

pub use hnsw::HnswParams;
use hnsw::HnswGraph;

/// Neighbour returned by a query: `(r_id, weight)`.
pub type Neighbor = (EntityId, f64);

#[derive(Debug, Clone)]
enum Backend {
    Exact,
    Hnsw(HnswGraph),
}

/// Embeddings of R plus the search structure built over them. Immutable
/// after [`IndexedCollection::build`]; queries take `&self`.
#[derive(Debug, Clone)]
pub struct IndexedCollection {
    ids: Vec<EntityId>,
    dimension: usize,
    /// Row-major `|R| x d`.
    vectors: Vec<f64>,
    backend: Backend,
}

impl IndexedCollection {
    pub fn build(
        vectors: &[EmbeddingVector],
        ids: Vec<EntityId>,
        kind: IndexKind,
        params: &HnswParams,
    ) -> Result<Self> {
        if vectors.len() != ids.len() {
            return Err(Error::LengthMismatch {
                ids: ids.len(),
                vectors: vectors.len(),
            });
        }
        let first = vectors.first().ok_or(Error::EmptyCollection)?;
        let dimension = first.dimension();
        let mut flat = Vec::with_capacity(vectors.len() * dimension);
        for v in vectors {
            if v.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: v.dimension(),
                });
            }
            flat.extend_from_slice(v.values());
        }

        let mut index = Self {
            ids,
            dimension,
            vectors: flat,
            backend: Backend::Exact,
        };
        if kind == IndexKind::Hnsw {
            params.validate()?;
            index.backend = Backend::Hnsw(HnswGraph::build(&index, params));
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> IndexKind {
        match self.backend {
            Backend::Exact => IndexKind::Exact,
            Backend::Hnsw(_) => IndexKind::Hnsw,
        }
    }

    pub fn ids(&self) -> &[EntityId] {
        &self.ids
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Top-`k` neighbours of `query`, best first, never containing `exclude`.
    ///
    /// A zero query vector returns nothing. Panics if the query dimension
    /// differs from the index dimension.
    pub fn query(&self, query: &EmbeddingVector, k: usize, exclude: Option<&str>) -> Vec<Neighbor> {
        assert_eq!(
            query.dimension(),
            self.dimension,
            "query dimension must match the index"
        );
        if k == 0 || query.is_zero() {
            return Vec::new();
        }
        let hits = match &self.backend {
            Backend::Exact => exact::top_k(self, query.values(), k, exclude),
            Backend::Hnsw(graph) => graph.search(self, query.values(), k, exclude),
        };
        hits.into_iter()
            .map(|hit| (self.ids[hit.node].clone(), clamp_weight(hit.score)))
            .collect()
    }
}

/// Scored node; orders by score, then prefers the smaller id so that
/// `Greater` always means "ranks earlier".
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hit {
    pub node: usize,
    pub score: f64,
}

pub(crate) fn rank(index: &IndexedCollection, a: &Hit, b: &Hit) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then_with(|| index.ids[b.node].cmp(&index.ids[a.node]))
}

#[cfg(test)]
mod tests;
