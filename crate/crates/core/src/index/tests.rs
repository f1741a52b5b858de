use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::*;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = ((rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
    let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

fn random_unit_vectors(n: usize, d: usize, seed: u64) -> Vec<EmbeddingVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| EmbeddingVector::normalized((0..d).map(|_| gaussian(&mut rng)).collect()))
        .collect()
}

fn ids(n: usize) -> Vec<EntityId> {
    (0..n).map(|i| EntityId::from(format!("r{i:04}"))).collect()
}

/// Oracle: score every stored vector and fully sort.
fn brute_force(vectors: &[EmbeddingVector], ids: &[EntityId], q: &EmbeddingVector, k: usize) -> Vec<Neighbor> {
    let mut all: Vec<(EntityId, f64)> = vectors
        .iter()
        .zip(ids)
        .map(|(v, id)| (id.clone(), q.dot(v)))
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all.into_iter().map(|(id, s)| (id, clamp_weight(s))).collect()
}

fn exact(vectors: &[EmbeddingVector]) -> IndexedCollection {
    IndexedCollection::build(vectors, ids(vectors.len()), IndexKind::Exact, &HnswParams::default())
        .unwrap()
}

#[test]
fn single_vector_returns_itself() {
    let v = random_unit_vectors(1, 16, 3);
    for kind in [IndexKind::Exact, IndexKind::Hnsw] {
        let index = IndexedCollection::build(&v, ids(1), kind, &HnswParams::default()).unwrap();
        let hits = index.query(&v[0], 5, None);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0.as_str(), "r0000");
        assert!((hits[0].1 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn exact_top5_matches_brute_force_on_20_vectors() {
    let vectors = random_unit_vectors(20, 8, 11);
    let index = exact(&vectors);
    let queries = random_unit_vectors(10, 8, 12);
    for q in &queries {
        assert_eq!(index.query(q, 5, None), brute_force(&vectors, index.ids(), q, 5));
    }
}

#[test]
fn saturates_when_k_exceeds_collection() {
    let vectors = random_unit_vectors(7, 8, 5);
    let index = exact(&vectors);
    assert_eq!(index.query(&vectors[2], 50, None).len(), 7);
}

#[test]
fn zero_query_returns_nothing() {
    let vectors = random_unit_vectors(7, 8, 5);
    for kind in [IndexKind::Exact, IndexKind::Hnsw] {
        let index = IndexedCollection::build(&vectors, ids(7), kind, &HnswParams::default()).unwrap();
        assert!(index.query(&EmbeddingVector::zero(8), 3, None).is_empty());
    }
}

#[test]
fn weights_are_clamped_for_anti_parallel_vectors() {
    let v = EmbeddingVector::normalized(vec![1.0, 0.0, 0.0, 0.0]);
    let anti = EmbeddingVector::normalized(vec![-1.0, 0.0, 0.0, 0.0]);
    let index = exact(&[anti]);
    let hits = index.query(&v, 1, None);
    assert_eq!(hits[0].1, 0.0);
}

#[test]
fn ties_break_by_ascending_id() {
    let v = EmbeddingVector::normalized(vec![1.0, 0.0]);
    let stored = vec![v.clone(), v.clone(), v.clone()];
    let names: Vec<EntityId> = ["c", "a", "b"].iter().map(|s| EntityId::from(*s)).collect();
    let index = IndexedCollection::build(&stored, names, IndexKind::Exact, &HnswParams::default()).unwrap();
    let got: Vec<_> = index.query(&v, 2, None).into_iter().map(|h| h.0.to_string()).collect();
    assert_eq!(got, ["a", "b"]);
}

#[test]
fn exclusion_filter_drops_the_query_id() {
    let vectors = random_unit_vectors(30, 8, 9);
    for kind in [IndexKind::Exact, IndexKind::Hnsw] {
        let index = IndexedCollection::build(&vectors, ids(30), kind, &HnswParams::default()).unwrap();
        let hits = index.query(&vectors[4], 5, Some("r0004"));
        assert_eq!(hits.len(), 5);
        assert!(hits.iter().all(|h| h.0.as_str() != "r0004"));
    }
}

#[test]
fn build_errors() {
    let mixed = vec![EmbeddingVector::zero(4), EmbeddingVector::zero(5)];
    assert!(matches!(
        IndexedCollection::build(&mixed, ids(2), IndexKind::Exact, &HnswParams::default()),
        Err(Error::DimensionMismatch { expected: 4, found: 5 })
    ));
    assert!(matches!(
        IndexedCollection::build(&[], Vec::new(), IndexKind::Hnsw, &HnswParams::default()),
        Err(Error::EmptyCollection)
    ));
    assert!(matches!(
        IndexedCollection::build(&mixed, ids(1), IndexKind::Exact, &HnswParams::default()),
        Err(Error::LengthMismatch { .. })
    ));
}

#[test]
fn hnsw_graph_is_well_formed() {
    let vectors = random_unit_vectors(400, 16, 21);
    let params = HnswParams { m: 6, ..HnswParams::default() };
    let index = IndexedCollection::build(&vectors, ids(400), IndexKind::Hnsw, &params).unwrap();
    let graph = index.graph().unwrap();
    for (node, layer, n) in graph.edges() {
        assert!((n as usize) < index.len());
        assert_ne!(node, n as usize);
        let _ = layer;
    }
    assert!(graph.max_degree_observed(0) <= 12);
    assert!(graph.max_degree_observed(1) <= 6);
}

#[test]
fn hnsw_recall_on_50_vectors() {
    let vectors = random_unit_vectors(50, 16, 31);
    let exact_index = exact(&vectors);
    let hnsw = IndexedCollection::build(&vectors, ids(50), IndexKind::Hnsw, &HnswParams::default()).unwrap();
    let queries = random_unit_vectors(50, 16, 32);
    let mut found = 0;
    for q in &queries {
        let truth = exact_index.query(q, 5, None);
        let approx = hnsw.query(q, 5, None);
        let mut seen = alloc::collections::BTreeSet::new();
        assert!(approx.iter().all(|h| seen.insert(h.0.clone())), "duplicate ids");
        found += approx.iter().filter(|h| truth.iter().any(|t| t.0 == h.0)).count();
    }
    let recall = found as f64 / (5.0 * queries.len() as f64);
    // ef_search = 64 covers all 50 nodes, so the beam search is exhaustive.
    assert_eq!(recall, 1.0);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_query_sorted_and_bounded(seed in any::<u64>(), n in 1usize..40, k in 1usize..8) {
            let vectors = random_unit_vectors(n, 6, seed);
            let index = exact(&vectors);
            let q = random_unit_vectors(1, 6, seed ^ 0xABCD).remove(0);
            let hits = index.query(&q, k, None);
            prop_assert_eq!(hits.len(), k.min(n));
            for w in hits.windows(2) {
                prop_assert!(w[0].1 >= w[1].1);
            }
            prop_assert!(hits.iter().all(|h| (0.0..=1.0).contains(&h.1)));
        }

        #[test]
        fn exact_query_ignores_insertion_order(seed in any::<u64>(), n in 2usize..30) {
            let vectors = random_unit_vectors(n, 6, seed);
            let names = ids(n);
            let forward = IndexedCollection::build(&vectors, names.clone(), IndexKind::Exact, &HnswParams::default()).unwrap();
            let rev_vectors: Vec<_> = vectors.iter().rev().cloned().collect();
            let rev_names: Vec<_> = names.iter().rev().cloned().collect();
            let backward = IndexedCollection::build(&rev_vectors, rev_names, IndexKind::Exact, &HnswParams::default()).unwrap();
            let q = random_unit_vectors(1, 6, seed.wrapping_add(1)).remove(0);
            prop_assert_eq!(forward.query(&q, 4, None), backward.query(&q, 4, None));
        }
    }
}
