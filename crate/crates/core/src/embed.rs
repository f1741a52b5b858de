//! Signed feature hashing of character n-grams.
//!
//! Text is lowercased and padded with one boundary marker on each side, then
//! cut into overlapping character n-grams. Each n-gram is hashed twice with
//! XXH3: one hash picks the coordinate, the other the sign. The accumulated
//! vector is L2-normalized, so inner products approximate n-gram overlap
//! without a vocabulary.

use alloc::string::String;
use alloc::vec::Vec;

use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};
use crate::types::EmbeddingVector;

const BOUNDARY: char = '\u{1F}';
const SIGN_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashEmbedderConfig {
    pub dimension: usize,
    pub ngram_size: usize,
    pub hash_seed: u64,
}

impl HashEmbedderConfig {
    /// Defaults (d = 256, trigrams) with the hash seed derived from the run seed.
    pub fn from_run_seed(seed: u64) -> Self {
        Self {
            dimension: 256,
            ngram_size: 3,
            hash_seed: derive_hash_seed(seed),
        }
    }
}

impl Default for HashEmbedderConfig {
    fn default() -> Self {
        Self::from_run_seed(0)
    }
}

/// splitmix64 finalizer; decorrelates the hash seed from small run seeds.
fn derive_hash_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct HashEmbedder {
    config: HashEmbedderConfig,
    sign_seed: u64,
}

impl HashEmbedder {
    pub fn new(config: HashEmbedderConfig) -> Result<Self> {
        if config.dimension < 8 {
            return Err(Error::InvalidConfig(alloc::format!(
                "hash embedder dimension must be at least 8, got {}",
                config.dimension
            )));
        }
        if config.ngram_size < 1 {
            return Err(Error::InvalidConfig(String::from(
                "n-gram size must be at least 1",
            )));
        }
        let sign_seed = config.hash_seed ^ SIGN_SEED_SALT;
        Ok(Self { config, sign_seed })
    }

    pub fn config(&self) -> &HashEmbedderConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.config.dimension
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let n = self.config.ngram_size;
        let dim = self.config.dimension;
        let lowered = text.to_lowercase();
        if lowered.chars().count() < n {
            return EmbeddingVector::zero(dim);
        }

        let mut chars: Vec<char> = Vec::with_capacity(lowered.len() + 2);
        chars.push(BOUNDARY);
        chars.extend(lowered.chars());
        chars.push(BOUNDARY);

        let mut acc = alloc::vec![0.0f64; dim];
        let mut gram = String::with_capacity(4 * n);
        for window in chars.windows(n) {
            gram.clear();
            gram.extend(window);
            let bytes = gram.as_bytes();
            let slot = (xxh3_64_with_seed(bytes, self.config.hash_seed) % dim as u64) as usize;
            let sign = if xxh3_64_with_seed(bytes, self.sign_seed) & 1 == 0 {
                1.0
            } else {
                -1.0
            };
            acc[slot] += sign;
        }
        EmbeddingVector::normalized(acc)
    }

    pub fn embed_batch<S: AsRef<str>>(&self, texts: &[S]) -> Vec<EmbeddingVector> {
        texts.iter().map(|t| self.embed(t.as_ref())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embedder() -> HashEmbedder {
        HashEmbedder::new(HashEmbedderConfig::from_run_seed(7)).unwrap()
    }

    #[test]
    fn empty_and_short_text_is_zero() {
        let e = embedder();
        assert!(e.embed("").is_zero());
        assert!(e.embed("ab").is_zero());
        assert!(!e.embed("abc").is_zero());
    }

    #[test]
    fn outputs_are_unit_length() {
        let e = embedder();
        for text in ["ipad mini", "Canon PowerShot SX-200", "ÄÖÜ straße", "x y z w"] {
            let v = e.embed(text);
            assert!((v.norm() - 1.0).abs() < 1e-6, "{text}: {}", v.norm());
            assert_eq!(v.dimension(), 256);
        }
    }

    #[test]
    fn embedding_is_deterministic_and_case_insensitive() {
        let e = embedder();
        assert_eq!(e.embed("iPad Mini"), e.embed("iPad Mini"));
        assert_eq!(e.embed("IPAD MINI"), e.embed("ipad mini"));
        let other = HashEmbedder::new(HashEmbedderConfig::from_run_seed(7)).unwrap();
        assert_eq!(e.embed("apple"), other.embed("apple"));
    }

    #[test]
    fn near_duplicates_score_higher_than_unrelated_text() {
        let e = embedder();
        let a = e.embed("ipad mini 16gb");
        let near = a.dot(&e.embed("ipad mini 16 gb"));
        let far = a.dot(&e.embed("canon powershot"));
        assert!(near > far, "near {near} far {far}");
        // Pinned from an independent Python re-implementation (xxhash package).
        assert!((near - 0.8006407690254358).abs() < 1e-12, "{near}");
        assert!((far - -0.07453559924999299).abs() < 1e-12, "{far}");
    }

    #[test]
    fn batch_matches_single_embeds() {
        let e = embedder();
        assert!(e.embed_batch::<&str>(&[]).is_empty());
        let texts = ["one", "two words", "", "three more words"];
        let batch = e.embed_batch(&texts);
        for (t, v) in texts.iter().zip(&batch) {
            assert_eq!(&e.embed(t), v);
        }
    }

    #[test]
    fn rejects_tiny_dimension() {
        let cfg = HashEmbedderConfig {
            dimension: 4,
            ..HashEmbedderConfig::default()
        };
        assert!(HashEmbedder::new(cfg).is_err());
    }
}
