//! Synthetic candidate streams with known weight distributions.
//!
//! Each query entity gets `k` candidates whose weights are drawn from the
//! configured distribution and ordered best-first, as an index would return
//! them. Mixture and planted streams also label which candidates are true
//! matches, so recall can be measured without an embedder.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use sper_core::{CandidatePair, EntityId, TruthSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDistribution {
    Uniform { low: f64, high: f64 },
    Beta { a: f64, b: f64 },
    /// Each candidate is a match with probability `match_fraction`; matches
    /// draw from `Beta(matched)`, non-matches from `Beta(unmatched)`.
    Mixture {
        matched: (f64, f64),
        unmatched: (f64, f64),
        match_fraction: f64,
    },
    /// Linkage over `n x n` records: query `s_i` has exactly one true match
    /// `r_i` among its candidates, the rest are random other records.
    Planted { matched: (f64, f64), unmatched: (f64, f64) },
}

impl WeightDistribution {
    pub const DEFAULT_MATCHED: (f64, f64) = (8.0, 2.0);
    pub const DEFAULT_UNMATCHED: (f64, f64) = (2.0, 8.0);

    pub fn mixture(match_fraction: f64) -> Self {
        Self::Mixture {
            matched: Self::DEFAULT_MATCHED,
            unmatched: Self::DEFAULT_UNMATCHED,
            match_fraction,
        }
    }

    pub fn planted() -> Self {
        Self::Planted {
            matched: Self::DEFAULT_MATCHED,
            unmatched: Self::DEFAULT_UNMATCHED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let beta_ok = |(a, b): (f64, f64)| a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite();
        let ok = match *self {
            Self::Uniform { low, high } => (0.0..=1.0).contains(&low) && (0.0..=1.0).contains(&high) && low <= high,
            Self::Beta { a, b } => beta_ok((a, b)),
            Self::Mixture {
                matched,
                unmatched,
                match_fraction,
            } => beta_ok(matched) && beta_ok(unmatched) && (0.0..=1.0).contains(&match_fraction),
            Self::Planted { matched, unmatched } => beta_ok(matched) && beta_ok(unmatched),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Usage(format!("invalid weight distribution {self}")))
        }
    }
}

impl fmt::Display for WeightDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { low, high } => write!(f, "uniform({low},{high})"),
            Self::Beta { a, b } => write!(f, "beta({a},{b})"),
            Self::Mixture {
                matched,
                unmatched,
                match_fraction,
            } => write!(
                f,
                "mixture(beta({},{}),beta({},{}),{match_fraction})",
                matched.0, matched.1, unmatched.0, unmatched.1
            ),
            Self::Planted { matched, unmatched } => write!(
                f,
                "planted(beta({},{}),beta({},{}))",
                matched.0, matched.1, unmatched.0, unmatched.1
            ),
        }
    }
}

/// Names accepted on the command line: `uniform`, `beta`, `mixture`, `linkage`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    Uniform,
    Beta,
    Mixture,
    Linkage,
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "beta" => Ok(Self::Beta),
            "mixture" => Ok(Self::Mixture),
            "linkage" | "planted" => Ok(Self::Linkage),
            other => Err(Error::Usage(format!("unknown distribution {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_queries: usize,
    pub k: usize,
    pub distribution: WeightDistribution,
    pub seed: u64,
}

/// A materialized synthetic stream: candidates per query plus the labels.
#[derive(Debug, Clone, Default)]
pub struct SyntheticWorkload {
    pub candidates: Vec<Vec<CandidatePair>>,
    pub truth: TruthSet,
}

impl SyntheticWorkload {
    pub fn pair_count(&self) -> usize {
        self.candidates.iter().map(Vec::len).sum()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.candidates.iter().flatten().map(CandidatePair::weight)
    }
}

/// Generator for workload `seed`. The filter draws from stream 0 of the same
/// seed; workloads use stream 1 so weights never reuse the filter's words.
fn stream_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn beta(params: (f64, f64)) -> Beta<f64> {
    Beta::new(params.0, params.1).expect("beta parameters validated")
}

impl SyntheticSpec {
    pub fn generate(&self) -> Result<SyntheticWorkload> {
        self.distribution.validate()?;
        if self.k == 0 {
            return Err(Error::Usage("k must be at least 1".into()));
        }
        let mut rng = stream_rng(self.seed);
        let mut truth = TruthSet::new(false);
        let r_ids: Vec<EntityId> = (0..self.n_queries).map(|i| EntityId::from(format!("r{i}"))).collect();
        let mut candidates = Vec::with_capacity(self.n_queries);

        for q in 0..self.n_queries {
            let s_id = EntityId::from(format!("s{q}"));
            let mut row: Vec<CandidatePair> = Vec::with_capacity(self.k);
            match self.distribution {
                WeightDistribution::Planted { matched, unmatched } => {
                    let others = self.k.min(self.n_queries) - 1;
                    row.push(CandidatePair::new(r_ids[q].clone(), s_id.clone(), beta(matched).sample(&mut rng)));
                    truth.insert(r_ids[q].clone(), s_id.clone());
                    // Distinct non-matching records drawn from the rest of R.
                    for idx in sample(&mut rng, self.n_queries - 1, others) {
                        let r = if idx >= q { idx + 1 } else { idx };
                        row.push(CandidatePair::new(
                            r_ids[r].clone(),
                            s_id.clone(),
                            beta(unmatched).sample(&mut rng),
                        ));
                    }
                }
                dist => {
                    for j in 0..self.k {
                        let r_id = EntityId::from(format!("r{q}_{j}"));
                        let (w, is_match) = draw(dist, &mut rng);
                        if is_match {
                            truth.insert(r_id.clone(), s_id.clone());
                        }
                        row.push(CandidatePair::new(r_id, s_id.clone(), w));
                    }
                }
            }
            row.sort_by(|a, b| b.weight().total_cmp(&a.weight()).then_with(|| a.r_id.cmp(&b.r_id)));
            candidates.push(row);
        }
        Ok(SyntheticWorkload { candidates, truth })
    }

    /// Bare weights, `k` per query, without ids or labels. Cheap enough for
    /// Monte-Carlo loops over millions of pairs.
    pub fn weights(&self) -> Result<Vec<f64>> {
        self.distribution.validate()?;
        let mut rng = stream_rng(self.seed);
        Ok((0..self.n_queries * self.k)
            .map(|_| draw(self.distribution, &mut rng).0)
            .collect())
    }
}


fn draw(dist: WeightDistribution, rng: &mut ChaCha8Rng) -> (f64, bool) {
    match dist {
        WeightDistribution::Uniform { low, high } => (low + (high - low) * rng.random::<f64>(), false),
        WeightDistribution::Beta { a, b } => (beta((a, b)).sample(rng), false),
        WeightDistribution::Mixture {
            matched,
            unmatched,
            match_fraction,
        } => {
            let is_match = rng.random::<f64>() < match_fraction;
            let params = if is_match { matched } else { unmatched };
            (beta(params).sample(rng), is_match)
        }
        // Outside of a linkage layout a planted stream degenerates to a
        // mixture with one match in k; callers use `generate` for it.
        WeightDistribution::Planted { matched, unmatched } => {
            let is_match = rng.random::<f64>() < 0.2;
            let params = if is_match { matched } else { unmatched };
            (beta(params).sample(rng), is_match)
        }
    }
}

/// The bundled linkage benchmark: 1,000 x 1,000 records, k = 5, one planted
/// match per query with weight ~ Beta(8, 2), non-matches ~ Beta(2, 8).
pub fn linkage_benchmark(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_queries: 1000,
        k: 5,
        distribution: WeightDistribution::planted(),
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec {
            n_queries: 50,
            k: 5,
            distribution: WeightDistribution::mixture(0.2),
            seed: 3,
        };
        let a = spec.generate().unwrap();
        let b = spec.generate().unwrap();
        assert_eq!(a.candidates, b.candidates);
        assert_eq!(a.truth, b.truth);
        assert_eq!(spec.weights().unwrap(), spec.weights().unwrap());
    }

    #[test]
    fn weights_stay_in_unit_interval_and_rows_are_sorted() {
        for dist in [
            WeightDistribution::Uniform { low: 0.2, high: 0.9 },
            WeightDistribution::Beta { a: 2.0, b: 5.0 },
            WeightDistribution::mixture(0.3),
            WeightDistribution::planted(),
        ] {
            let w = SyntheticSpec { n_queries: 200, k: 5, distribution: dist, seed: 1 }
                .generate()
                .unwrap();
            assert_eq!(w.pair_count(), 1000);
            for row in &w.candidates {
                assert!(row.windows(2).all(|p| p[0].weight() >= p[1].weight()));
            }
            assert!(w.weights().all(|x| (0.0..=1.0).contains(&x)), "{dist}");
        }
    }

    #[test]
    fn planted_linkage_has_one_match_per_query() {
        let w = linkage_benchmark(4).generate().unwrap();
        assert_eq!(w.candidates.len(), 1000);
        assert_eq!(w.truth.len(), 1000);
        for (q, row) in w.candidates.iter().enumerate() {
            let s = EntityId::from(format!("s{q}"));
            let matches = row.iter().filter(|p| w.truth.contains(&p.r_id, &s)).count();
            assert_eq!(matches, 1);
            let mut ids: Vec<_> = row.iter().map(|p| p.r_id.clone()).collect();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), 5);
        }
    }

    #[test]
    fn mixture_match_fraction_is_respected() {
        let w = SyntheticSpec {
            n_queries: 4000,
            k: 5,
            distribution: WeightDistribution::mixture(0.2),
            seed: 9,
        }
        .generate()
        .unwrap();
        // Binomial(20000, 0.2): sd ~ 57.
        let matches = w.truth.len() as f64;
        assert!((matches - 4000.0).abs() < 300.0, "{matches}");
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(WeightDistribution::Beta { a: 0.0, b: 1.0 }.validate().is_err());
        assert!(WeightDistribution::Uniform { low: 0.5, high: 1.5 }.validate().is_err());
        assert!(WeightDistribution::mixture(1.2).validate().is_err());
        assert!("gamma".parse::<DistributionKind>().is_err());
    }
}
