//! Evaluation of an emission stream: cumulative recall and precision,
//! normalized cumulative utility (NCU) against the offline top-B set, budget
//! adherence and the alpha trajectory.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::types::{CandidatePair, EntityId, Mode};

/// Curves are sampled every this many emissions, plus the origin and the
/// final point.
pub const CURVE_STEP: usize = 100;

/// Ground-truth matches. In self-join mode pairs are stored canonically so
/// `(a, b)` and `(b, a)` are the same match.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TruthSet {
    pairs: BTreeSet<(EntityId, EntityId)>,
    symmetric: bool,
}

impl TruthSet {
    pub fn new(symmetric: bool) -> Self {
        Self {
            pairs: BTreeSet::new(),
            symmetric,
        }
    }

    fn key(&self, r: &EntityId, s: &EntityId) -> (EntityId, EntityId) {
        if self.symmetric && s < r {
            (s.clone(), r.clone())
        } else {
            (r.clone(), s.clone())
        }
    }

    /// Returns false if the pair was already present.
    pub fn insert(&mut self, r: EntityId, s: EntityId) -> bool {
        let key = self.key(&r, &s);
        self.pairs.insert(key)
    }

    pub fn contains(&self, r: &EntityId, s: &EntityId) -> bool {
        self.pairs.contains(&self.key(r, s))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn iter(&self) -> impl Iterator<Item = &(EntityId, EntityId)> {
        self.pairs.iter()
    }
}

/// Distinct true matches among each prefix of the emission stream:
/// `out[i]` counts the first `i` emissions, so `out.len() == emissions + 1`.
pub fn true_positive_prefix<'a, I>(emissions: I, truth: &TruthSet) -> Vec<usize>
where
    I: IntoIterator<Item = &'a CandidatePair>,
{
    let mut found = BTreeSet::new();
    let mut counts = alloc::vec![0];
    let mut tp = 0;
    for pair in emissions {
        if truth.contains(&pair.r_id, &pair.s_id) && found.insert(truth.key(&pair.r_id, &pair.s_id)) {
            tp += 1;
        }
        counts.push(tp);
    }
    counts
}

/// Fraction of the truth found among the first `prefix` emissions; `None`
/// when the truth is empty.
pub fn recall_at(emissions: &[CandidatePair], truth: &TruthSet, prefix: usize) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let prefix = prefix.min(emissions.len());
    let tp = true_positive_prefix(&emissions[..prefix], truth)[prefix];
    Some(tp as f64 / truth.len() as f64)
}

/// True-positive share of the first `prefix` emissions; 0 for an empty prefix.
pub fn precision_at(emissions: &[CandidatePair], truth: &TruthSet, prefix: usize) -> f64 {
    let prefix = prefix.min(emissions.len());
    if prefix == 0 {
        return 0.0;
    }
    let tp = true_positive_prefix(&emissions[..prefix], truth)[prefix];
    tp as f64 / prefix as f64
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Curves {
    /// `(emitted_count, recall)`.
    pub recall: Vec<(usize, f64)>,
    /// `(emitted_count, precision)`.
    pub precision: Vec<(usize, f64)>,
}

/// Sampled recall and precision curves. `None` without ground truth.
pub fn curves(emissions: &[CandidatePair], truth: &TruthSet) -> Option<Curves> {
    if truth.is_empty() {
        return None;
    }
    let tp = true_positive_prefix(emissions, truth);
    let n = emissions.len();
    let mut out = Curves::default();
    let points = (0..=n).step_by(CURVE_STEP).chain((!n.is_multiple_of(CURVE_STEP)).then_some(n));
    for i in points {
        out.recall.push((i, tp[i] as f64 / truth.len() as f64));
        let precision = if i == 0 { 0.0 } else { tp[i] as f64 / i as f64 };
        out.precision.push((i, precision));
    }
    Some(out)
}

/// Candidate weights sorted descending with prefix sums, so the utility of
/// the best `j` candidates is available for any `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedWeights {
    prefix: Vec<f64>,
}

impl RankedWeights {
    pub fn new<I: IntoIterator<Item = f64>>(weights: I) -> Self {
        let mut sorted: Vec<f64> = weights.into_iter().collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for w in sorted {
            acc += w;
            prefix.push(acc);
        }
        Self { prefix }
    }

    pub fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Utility of the `j` heaviest candidates (saturating at all of them).
    pub fn top_utility(&self, j: usize) -> f64 {
        self.prefix[j.min(self.len())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ncu {
    /// `U(selected) / U(top-B)`. Can exceed 1 when the sampler overshoots B.
    pub vs_top_b: Option<f64>,
    /// `U(selected) / U(top-|selected|)`, never above 1.
    pub matched: Option<f64>,
}

/// Both NCU variants for a selection of `selected_count` pairs with total
/// weight `selected_utility`.
pub fn ncu(selected_utility: f64, selected_count: usize, ranked: &RankedWeights, budget: usize) -> Ncu {
    let ratio = |den: f64| (den > 0.0).then(|| selected_utility / den);
    let matched = if selected_count == 0 {
        Some(0.0)
    } else {
        ratio(ranked.top_utility(selected_count))
    };
    Ncu {
        vs_top_b: ratio(ranked.top_utility(budget)),
        matched,
    }
}

/// Expected sampler utility at a fixed alpha relative to the top-B utility:
/// `sum(min(1, alpha * w) * w) / U(top-B)`; equals `alpha * sum(w^2) / U(top-B)`
/// while no probability is capped.
pub fn theoretical_ncu(weights: &[f64], alpha: f64, ranked: &RankedWeights, budget: usize) -> Option<f64> {
    let top = ranked.top_utility(budget);
    let expected: f64 = weights.iter().map(|&w| (alpha * w).min(1.0) * w).sum();
    (top > 0.0).then(|| expected / top)
}

/// Checks `sum(w^2) >= (sum w)^2 / n`, the bound that makes weighted
/// sampling dominate uniform sampling at equal expected size.
pub fn second_moment_dominates(weights: &[f64]) -> bool {
    if weights.is_empty() {
        return true;
    }
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let n = weights.len() as f64;
    // Relative slack for summation rounding when all weights are equal.
    sum_sq * (1.0 + 1e-12) >= sum * sum / n
}

/// Wall time per phase, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub embed: f64,
    /// One-time index construction over R.
    pub index: f64,
    pub query: f64,
    pub filter: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetAdherence {
    pub target: u64,
    pub observed: usize,
    /// `|m - B| / B`; `None` when `B = 0`.
    pub relative_deviation: Option<f64>,
}

impl BudgetAdherence {
    pub fn new(target: u64, observed: usize) -> Self {
        let relative_deviation =
            (target > 0).then(|| (observed as f64 - target as f64).abs() / target as f64);
        Self {
            target,
            observed,
            relative_deviation,
        }
    }
}

/// Everything reported for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub mode: Mode,
    pub seed: u64,
    pub budget: BudgetAdherence,
    pub curves: Option<Curves>,
    pub ncu: Ncu,
    /// Expected-utility reference at the offline ideal alpha.
    pub theoretical_ncu: Option<f64>,
    pub second_moment_check: bool,
    /// `(entity_count, alpha)` at each window boundary.
    pub alpha_trace: Vec<(usize, f64)>,
    pub ideal_alpha: Option<f64>,
    pub timings: PhaseTimings,
    pub draw_count: u64,
    pub truth_size: usize,
}

/// Inputs for [`RunMetrics::compute`].
#[derive(Debug, Clone, Copy)]
pub struct RunRecord<'a> {
    pub mode: Mode,
    pub seed: u64,
    pub budget: u64,
    /// Emitted pairs, in emission order.
    pub emissions: &'a [CandidatePair],
    /// Every retrieved candidate, in stream order.
    pub candidates: &'a [CandidatePair],
    pub truth: Option<&'a TruthSet>,
    pub alpha_trace: &'a [(usize, f64)],
    pub timings: PhaseTimings,
    pub draw_count: u64,
}

impl RunMetrics {
    pub fn compute(record: RunRecord<'_>) -> Self {
        let weights: Vec<f64> = record.candidates.iter().map(CandidatePair::weight).collect();
        let ranked = RankedWeights::new(weights.iter().copied());
        let budget = record.budget as usize;
        let selected_utility: f64 = record.emissions.iter().map(CandidatePair::weight).sum();
        let ideal = crate::controller::ideal_alpha(weights.iter().copied(), record.budget as f64);
        Self {
            mode: record.mode,
            seed: record.seed,
            budget: BudgetAdherence::new(record.budget, record.emissions.len()),
            curves: record.truth.and_then(|t| curves(record.emissions, t)),
            ncu: ncu(selected_utility, record.emissions.len(), &ranked, budget),
            theoretical_ncu: ideal.and_then(|a| theoretical_ncu(&weights, a, &ranked, budget)),
            second_moment_check: second_moment_dominates(&weights),
            alpha_trace: record.alpha_trace.to_vec(),
            ideal_alpha: ideal,
            timings: record.timings,
            draw_count: record.draw_count,
            truth_size: record.truth.map_or(0, TruthSet::len),
        }
    }

    /// Recall after the final emission.
    pub fn final_recall(&self) -> Option<f64> {
        self.curves.as_ref().and_then(|c| c.recall.last()).map(|p| p.1)
    }
}
