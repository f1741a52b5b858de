//! End-to-end runs: candidate retrieval feeding one prioritization mode.
//!
//! All four modes consume the same candidates from a [`CandidateSource`].
//! The stochastic mode streams them through [`SperStream`] one query entity
//! at a time; the baselines materialize the full candidate set first.

use std::borrow::Borrow;
use std::collections::{HashMap, HashSet};
use std::time::Instant;

use sper_core::baselines::{threshold_filter, top_b, uniform_sample};
use sper_core::controller::total_budget;
use sper_core::metrics::{RunRecord, TruthSet};
use sper_core::{
    BudgetController, CandidatePair, EmbedderKind, EmbeddingVector, EntityId, FilterRng, HashEmbedder,
    HashEmbedderConfig, IndexedCollection, Mode, PhaseTimings, RunConfig, RunMetrics, SelectedPair,
    SperStream,
};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::synth::SyntheticWorkload;

/// Supplies each query entity's candidates in stream order.
pub trait CandidateSource {
    fn query_count(&self) -> usize;

    /// Appends the candidates of query `query` to `out`, in retrieval order.
    /// Time spent embedding and searching is added to `timings`.
    fn candidates(&mut self, query: usize, out: &mut Vec<CandidatePair>, timings: &mut PhaseTimings) -> Result<()>;

    /// Time already spent preparing the source (embedding R, building the index).
    fn setup_timings(&self) -> PhaseTimings {
        PhaseTimings::default()
    }
}

enum QueryEmbedder<'a> {
    Hash(HashEmbedder),
    Precomputed(&'a HashMap<EntityId, EmbeddingVector>),
}

impl QueryEmbedder<'_> {
    fn embed(&self, id: &EntityId, text: &str) -> Result<EmbeddingVector> {
        match self {
            Self::Hash(e) => Ok(e.embed(text)),
            Self::Precomputed(map) => map
                .get(id)
                .cloned()
                .ok_or_else(|| Error::MissingEmbedding(id.to_string())),
        }
    }
}

/// Embeds S record by record and queries an index built over R.
pub struct Retriever<'a> {
    dataset: &'a Dataset,
    embedder: QueryEmbedder<'a>,
    index: IndexedCollection,
    k: usize,
    /// Canonical pairs already produced; only used in self-join mode.
    seen: HashSet<(EntityId, EntityId)>,
    setup: PhaseTimings,
}

impl<'a> Retriever<'a> {
    pub fn new(
        dataset: &'a Dataset,
        config: &RunConfig,
        precomputed: Option<&'a HashMap<EntityId, EmbeddingVector>>,
    ) -> Result<Self> {
        let mut setup = PhaseTimings::default();
        let embedder = match (config.embedder_kind, precomputed) {
            (EmbedderKind::Precomputed, Some(map)) => QueryEmbedder::Precomputed(map),
            (EmbedderKind::Precomputed, None) => {
                return Err(Error::Usage("precomputed embedder selected but no embeddings loaded".into()))
            }
            (EmbedderKind::Hash, _) => QueryEmbedder::Hash(HashEmbedder::new(HashEmbedderConfig {
                dimension: config.dimension,
                ..HashEmbedderConfig::from_run_seed(config.seed)
            })?),
        };

        let start = Instant::now();
        let vectors = dataset
            .records_r
            .iter()
            .map(|r| embedder.embed(&r.id, &r.text))
            .collect::<Result<Vec<_>>>()?;
        setup.embed = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let ids = dataset.records_r.iter().map(|r| r.id.clone()).collect();
        let index = IndexedCollection::build(&vectors, ids, config.index_kind, &config.hnsw)?;
        setup.index = start.elapsed().as_secs_f64();

        Ok(Self {
            dataset,
            embedder,
            index,
            k: config.k,
            seen: HashSet::new(),
            setup,
        })
    }

    pub fn index(&self) -> &IndexedCollection {
        &self.index
    }
}

impl CandidateSource for Retriever<'_> {
    fn query_count(&self) -> usize {
        self.dataset.records_s.len()
    }

    fn candidates(&mut self, query: usize, out: &mut Vec<CandidatePair>, timings: &mut PhaseTimings) -> Result<()> {
        let record = &self.dataset.records_s[query];
        let start = Instant::now();
        let vector = self.embedder.embed(&record.id, &record.text)?;
        let embedded = Instant::now();
        timings.embed += (embedded - start).as_secs_f64();

        let exclude = self.dataset.dedup.then(|| record.id.as_str());
        let hits = self.index.query(&vector, self.k, exclude);
        for (r_id, weight) in hits {
            if self.dataset.dedup {
                // (a, b) and (b, a) are one candidate; keep the first seen.
                let key = if r_id < record.id {
                    (r_id.clone(), record.id.clone())
                } else {
                    (record.id.clone(), r_id.clone())
                };
                if !self.seen.insert(key.clone()) {
                    continue;
                }
                out.push(CandidatePair::new(key.0, key.1, weight));
            } else {
                out.push(CandidatePair::new(r_id, record.id.clone(), weight));
            }
        }
        timings.query += embedded.elapsed().as_secs_f64();
        Ok(())
    }

    fn setup_timings(&self) -> PhaseTimings {
        self.setup
    }
}

impl CandidateSource for &SyntheticWorkload {
    fn query_count(&self) -> usize {
        self.candidates.len()
    }

    fn candidates(&mut self, query: usize, out: &mut Vec<CandidatePair>, _: &mut PhaseTimings) -> Result<()> {
        out.extend_from_slice(&self.candidates[query]);
        Ok(())
    }
}

/// Result of the streaming loop alone.
#[derive(Debug, Clone)]
pub struct SperRun {
    pub controller: BudgetController,
    pub draw_count: u64,
    pub timings: PhaseTimings,
}

/// The stochastic loop: for every query entity, retrieve, filter each
/// candidate once, emit selections immediately, then close the entity on the
/// controller. `on_candidates` sees every candidate list before filtering.
pub fn run_sper<S, C, E>(
    source: &mut S,
    config: &RunConfig,
    mut on_candidates: C,
    mut on_emit: E,
) -> Result<SperRun>
where
    S: CandidateSource + ?Sized,
    C: FnMut(usize, &[CandidatePair]),
    E: FnMut(SelectedPair),
{
    let start = Instant::now();
    let n = source.query_count();
    let controller = BudgetController::new(config.rho, config.k, n, config.window_size, config.eta);
    let mut stream = SperStream::new(controller, config.seed);
    let mut timings = source.setup_timings();
    let mut buf = Vec::with_capacity(config.k);
    for q in 0..n {
        buf.clear();
        source.candidates(q, &mut buf, &mut timings)?;
        on_candidates(q, &buf);
        let filter_start = Instant::now();
        stream.process_entity(buf.drain(..), &mut on_emit);
        timings.filter += filter_start.elapsed().as_secs_f64();
    }
    timings.total += start.elapsed().as_secs_f64();
    Ok(SperRun {
        draw_count: stream.draw_count(),
        controller: stream.into_controller(),
        timings,
    })
}

/// Everything one run produced, before metrics.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mode: Mode,
    pub seed: u64,
    pub budget: u64,
    pub emissions: Vec<SelectedPair>,
    /// Every retrieved candidate in stream order.
    pub candidates: Vec<CandidatePair>,
    pub alpha_trace: Vec<(usize, f64)>,
    pub final_alpha: Option<f64>,
    pub timings: PhaseTimings,
    pub draw_count: u64,
}

impl RunOutput {
    pub fn emitted_pairs(&self) -> Vec<CandidatePair> {
        self.emissions.iter().map(|e| e.pair.clone()).collect()
    }

    pub fn metrics(&self, truth: Option<&TruthSet>) -> RunMetrics {
        let emitted = self.emitted_pairs();
        RunMetrics::compute(RunRecord {
            mode: self.mode,
            seed: self.seed,
            budget: self.budget,
            emissions: &emitted,
            candidates: &self.candidates,
            truth,
            alpha_trace: &self.alpha_trace,
            timings: self.timings,
            draw_count: self.draw_count,
        })
    }
}

#[derive(Clone)]
struct Tagged {
    query: usize,
    pair: CandidatePair,
}

impl Borrow<CandidatePair> for Tagged {
    fn borrow(&self) -> &CandidatePair {
        &self.pair
    }
}

/// Runs the configured mode over `source`, keeping every candidate for the
/// metrics.
pub fn run<S: CandidateSource + ?Sized>(source: &mut S, config: &RunConfig) -> Result<RunOutput> {
    let n = source.query_count();
    let budget = total_budget(config.rho, config.k, n);
    let mut candidates = Vec::with_capacity(n * config.k);

    if config.mode == Mode::Sper {
        let mut emissions = Vec::new();
        let run = run_sper(
            source,
            config,
            |_, c| candidates.extend_from_slice(c),
            |p| emissions.push(p),
        )?;
        return Ok(RunOutput {
            mode: config.mode,
            seed: config.seed,
            budget,
            emissions,
            candidates,
            alpha_trace: run.controller.alpha_trace().to_vec(),
            final_alpha: Some(run.controller.alpha()),
            timings: run.timings,
            draw_count: run.draw_count,
        });
    }

    let start = Instant::now();
    let mut timings = source.setup_timings();
    let mut tagged = Vec::with_capacity(n * config.k);
    let mut buf = Vec::with_capacity(config.k);
    for q in 0..n {
        buf.clear();
        source.candidates(q, &mut buf, &mut timings)?;
        tagged.extend(buf.iter().map(|p| Tagged { query: q, pair: p.clone() }));
    }

    let filter_start = Instant::now();
    let mut rng = FilterRng::new(config.seed);
    let selected = match config.mode {
        Mode::Oracle => top_b(&tagged, budget as usize),
        Mode::Threshold => threshold_filter(&tagged, config.threshold),
        Mode::Uniform => uniform_sample(&tagged, budget as usize, &mut rng),
        Mode::Sper => unreachable!(),
    };
    timings.filter += filter_start.elapsed().as_secs_f64();
    timings.total += start.elapsed().as_secs_f64();

    let emissions = selected
        .into_iter()
        .enumerate()
        .map(|(i, t)| SelectedPair {
            pair: t.pair,
            emit_index: i,
            query_index: t.query,
        })
        .collect();
    candidates.extend(tagged.into_iter().map(|t| t.pair));
    Ok(RunOutput {
        mode: config.mode,
        seed: config.seed,
        budget,
        emissions,
        candidates,
        alpha_trace: Vec::new(),
        final_alpha: None,
        timings,
        draw_count: rng.draw_count(),
    })
}

/// Retrieval over a loaded dataset followed by [`run`].
pub fn run_dataset(
    dataset: &Dataset,
    config: &RunConfig,
    precomputed: Option<&HashMap<EntityId, EmbeddingVector>>,
) -> Result<RunOutput> {
    let mut retriever = Retriever::new(dataset, config, precomputed)?;
    run(&mut retriever, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{SyntheticSpec, WeightDistribution};
    use sper_core::{EntityRecord, IndexKind};

    fn products() -> Dataset {
        let r = vec![
            EntityRecord::new("r1", "ipad mini 16gb apple"),
            EntityRecord::new("r2", "canon powershot sx200"),
            EntityRecord::new("r3", "sony bravia 40 inch tv"),
            EntityRecord::new("r4", "kindle paperwhite"),
        ];
        let s = vec![
            EntityRecord::new("s1", "apple ipad mini 16 gb"),
            EntityRecord::new("s2", "powershot sx200 canon camera"),
            EntityRecord::new("s3", ""),
        ];
        Dataset::linkage(r, s)
    }

    fn config(mode: Mode) -> RunConfig {
        RunConfig {
            k: 2,
            rho: 0.5,
            window_size: 10,
            mode,
            seed: 7,
            ..RunConfig::default()
        }
        .validated()
        .unwrap()
    }

    #[test]
    fn retrieval_finds_the_obvious_match_first() {
        let ds = products();
        let cfg = config(Mode::Sper);
        let mut retriever = Retriever::new(&ds, &cfg, None).unwrap();
        let mut out = Vec::new();
        let mut t = PhaseTimings::default();
        retriever.candidates(0, &mut out, &mut t).unwrap();
        assert_eq!(out[0].r_id.as_str(), "r1");
        out.clear();
        retriever.candidates(1, &mut out, &mut t).unwrap();
        assert_eq!(out[0].r_id.as_str(), "r2");
        out.clear();
        // Empty text embeds to zero and retrieves nothing.
        retriever.candidates(2, &mut out, &mut t).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn empty_query_side_produces_nothing() {
        let mut ds = products();
        ds.records_s.clear();
        let out = run_dataset(&ds, &config(Mode::Sper), None).unwrap();
        assert!(out.emissions.is_empty());
        assert_eq!(out.final_alpha, Some(1.0));
        assert!(out.alpha_trace.is_empty());
        assert_eq!(out.budget, 0);
    }

    #[test]
    fn modes_share_candidates() {
        let ds = products();
        let outs: Vec<_> = [Mode::Sper, Mode::Oracle, Mode::Threshold, Mode::Uniform]
            .into_iter()
            .map(|m| run_dataset(&ds, &config(m), None).unwrap())
            .collect();
        for o in &outs[1..] {
            assert_eq!(o.candidates, outs[0].candidates);
        }
        assert_eq!(outs[0].draw_count, outs[0].candidates.len() as u64);
        assert_eq!(outs[1].draw_count, 0);
        assert_eq!(outs[3].draw_count, outs[3].candidates.len() as u64);
        let oracle = outs[1].metrics(None);
        assert_eq!(oracle.ncu.vs_top_b, Some(1.0));
    }

    #[test]
    fn selections_are_a_subset_of_candidates() {
        let w = SyntheticSpec {
            n_queries: 2000,
            k: 5,
            distribution: WeightDistribution::mixture(0.2),
            seed: 1,
        }
        .generate()
        .unwrap();
        let cfg = RunConfig { seed: 3, ..RunConfig::default() };
        let out = run(&mut &w, &cfg).unwrap();
        let all: HashSet<(&str, &str)> = out.candidates.iter().map(|p| (p.r_id.as_str(), p.s_id.as_str())).collect();
        assert!(out.emissions.iter().all(|e| all.contains(&(e.pair.r_id.as_str(), e.pair.s_id.as_str()))));
        assert_eq!(out.draw_count, 10_000);
        assert_eq!(out.alpha_trace.len(), 10);
    }

    #[test]
    fn dedup_mode_never_pairs_a_record_with_itself() {
        let recs = vec![
            EntityRecord::new("a", "ipad mini 16gb"),
            EntityRecord::new("b", "ipad mini 16 gb"),
            EntityRecord::new("c", "canon powershot"),
            EntityRecord::new("d", "canon power shot"),
        ];
        let ds = Dataset::dedup(recs);
        for index_kind in [IndexKind::Exact, IndexKind::Hnsw] {
            let cfg = RunConfig { k: 3, index_kind, ..config(Mode::Threshold) }.validated().unwrap();
            let out = run_dataset(&ds, &RunConfig { threshold: 0.0, ..cfg }, None).unwrap();
            let mut keys = HashSet::new();
            for p in &out.candidates {
                assert_ne!(p.r_id, p.s_id);
                assert!(p.r_id < p.s_id);
                assert!(keys.insert((p.r_id.clone(), p.s_id.clone())));
            }
            // Four records, each linked to all three others: six distinct pairs.
            assert_eq!(out.candidates.len(), 6);
        }
    }

    #[test]
    fn precomputed_vectors_drive_retrieval() {
        let ds = Dataset::linkage(
            vec![EntityRecord::new("r1", ""), EntityRecord::new("r2", "")],
            vec![EntityRecord::new("s1", "")],
        );
        let map: HashMap<EntityId, EmbeddingVector> = [
            ("r1", vec![1.0, 0.0]),
            ("r2", vec![0.0, 1.0]),
            ("s1", vec![0.6, 0.8]),
        ]
        .into_iter()
        .map(|(id, v)| (EntityId::new(id), EmbeddingVector::normalized(v)))
        .collect();
        let cfg = RunConfig {
            embedder_kind: EmbedderKind::Precomputed,
            dimension: 2,
            ..config(Mode::Oracle)
        };
        let out = run_dataset(&ds, &cfg, Some(&map)).unwrap();
        assert_eq!(out.candidates[0].r_id.as_str(), "r2");
        assert!((out.candidates[0].weight() - 0.8).abs() < 1e-12);

        let mut partial = map.clone();
        partial.remove(&EntityId::new("s1"));
        assert!(matches!(run_dataset(&ds, &cfg, Some(&partial)), Err(Error::MissingEmbedding(_))));
    }
}
