//! Domain values shared by every stage of the engine.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::index::HnswParams;

/// Opaque record identifier. Cloning is a reference-count bump, so pairs can
/// carry ids through the stream without copying strings.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(Arc<str>);

impl EntityId {
    pub fn new(id: &str) -> Self {
        Self(Arc::from(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for EntityId {
    fn from(id: &str) -> Self {
        Self::new(id)
    }
}

impl From<String> for EntityId {
    fn from(id: String) -> Self {
        Self(Arc::from(id))
    }
}

impl Borrow<str> for EntityId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.0, f)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One source record: an identifier plus its attribute values joined by
/// single spaces in column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub id: EntityId,
    pub text: String,
}

impl EntityRecord {
    pub fn new(id: impl Into<EntityId>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// Dense embedding. Either unit length or exactly all-zero; the zero vector
/// marks a degenerate record and never produces candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Scales `values` to unit length. All-zero input stays all-zero.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = libm::sqrt(values.iter().map(|v| v * v).sum::<f64>());
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        } else {
            values.iter_mut().for_each(|v| *v = 0.0);
        }
        Self { values }
    }

    pub fn zero(dimension: usize) -> Self {
        Self {
            values: alloc::vec![0.0; dimension],
        }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum::<f64>())
    }

    /// Inner product, accumulated left to right.
    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        dot(&self.values, &other.values)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Maps a raw inner product of unit vectors to a weight in `[0, 1]`.
#[inline]
pub fn clamp_weight(similarity: f64) -> f64 {
    if similarity.is_nan() {
        0.0
    } else {
        similarity.clamp(0.0, 1.0)
    }
}

/// A retrieved edge `(r, s)` of the similarity graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePair {
    pub r_id: EntityId,
    pub s_id: EntityId,
    weight: f64,
}

impl CandidatePair {
    /// The weight is clamped into `[0, 1]`; NaN becomes 0.
    pub fn new(r_id: impl Into<EntityId>, s_id: impl Into<EntityId>, weight: f64) -> Self {
        Self {
            r_id: r_id.into(),
            s_id: s_id.into(),
            weight: clamp_weight(weight),
        }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// A pair chosen by a prioritization strategy, tagged with its position in
/// the emission stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedPair {
    pub pair: CandidatePair,
    pub emit_index: usize,
    pub query_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexKind {
    #[default]
    Exact,
    Hnsw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbedderKind {
    #[default]
    Hash,
    Precomputed,
}

/// Prioritization strategy applied to the retrieved candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Sper,
    Oracle,
    Threshold,
    Uniform,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sper => "sper",
            Mode::Oracle => "oracle",
            Mode::Threshold => "threshold",
            Mode::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! parse_enum {
    ($ty:ty, $what:literal, { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", $what, " {:?}"),
                        other
                    ))),
                }
            }
        }
    };
}

parse_enum!(IndexKind, "index kind", { "exact" => IndexKind::Exact, "hnsw" => IndexKind::Hnsw });
parse_enum!(EmbedderKind, "embedder kind", {
    "hash" => EmbedderKind::Hash,
    "precomputed" => EmbedderKind::Precomputed,
});
parse_enum!(Mode, "mode", {
    "sper" => Mode::Sper,
    "oracle" => Mode::Oracle,
    "threshold" => Mode::Threshold,
    "uniform" => Mode::Uniform,
});

/// Parameters of one run. Budget-derived quantities (`B`, `B_w`, initial
/// alpha) depend on `|S|` and are computed by [`crate::BudgetController`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Neighbours retrieved per query entity.
    pub k: usize,
    /// Budget ratio: `B = round(rho * k * |S|)`.
    pub rho: f64,
    /// Query entities per controller window.
    pub window_size: usize,
    /// Adaptation rate of the multiplicative update.
    pub eta: f64,
    pub seed: u64,
    pub dimension: usize,
    pub index_kind: IndexKind,
    pub embedder_kind: EmbedderKind,
    pub mode: Mode,
    /// Similarity cut-off, used only in threshold mode.
    pub threshold: f64,
    /// Self-join: one collection serves as both R and S.
    pub dedup: bool,
    pub hnsw: HnswParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 5,
            rho: 0.15,
            window_size: 200,
            eta: 0.05,
            seed: 0,
            dimension: 256,
            index_kind: IndexKind::Exact,
            embedder_kind: EmbedderKind::Hash,
            mode: Mode::Sper,
            threshold: 0.8,
            dedup: false,
            hnsw: HnswParams::default(),
        }
    }
}

/// Smallest window that keeps the chance of an empty window negligible:
/// `ceil(5 / rho)`.
pub fn min_window_size(rho: f64) -> usize {
    // The epsilon absorbs representation error such as 5 / 0.1 = 50.000000000000001.
    libm::ceil(5.0 / rho - 1e-9) as usize
}

impl RunConfig {
    /// Checks every parameter and returns the config unchanged when valid.
    pub fn validated(self) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k < 1 {
            return invalid(format!("k must be at least 1, got {}", self.k));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return invalid(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        let min_window = min_window_size(self.rho);
        if self.window_size < min_window {
            return invalid(format!(
                "window size {} is below the stability bound ceil(5 / rho) = {} for rho = {}",
                self.window_size, min_window, self.rho
            ));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return invalid(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if self.dimension < 1 {
            return invalid(String::from("dimension must be positive"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return invalid(format!("threshold must lie in [0, 1], got {}", self.threshold));
        }
        self.hnsw.validate()?;
        Ok(self)
    }
}
