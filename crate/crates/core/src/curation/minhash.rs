//! MinHash signatures over word shingles.
//!
//! Each shingle is hashed once with XXH3, reduced modulo the Mersenne prime
//! 2^61 - 1, and then pushed through `permutation_count` universal hash
//! functions `(a * x + b) mod p` whose coefficients come from a ChaCha stream
//! seeded with `hash_seed`.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

const MERSENNE_61: u64 = (1 << 61) - 1;

/// Signature value used for every slot when a text has no shingles.
pub const EMPTY_SLOT: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinHashConfig {
    pub permutation_count: usize,
    pub bands: usize,
    pub rows: usize,
    pub threshold: f64,
    /// Tokens per shingle.
    pub shingle_width: usize,
    pub hash_seed: u64,
}

impl Default for MinHashConfig {
    fn default() -> Self {
        MinHashConfig {
            permutation_count: 256,
            bands: 32,
            rows: 8,
            threshold: 0.8,
            shingle_width: 5,
            hash_seed: 0x5C06_E115,
        }
    }
}

impl MinHashConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.permutation_count == 0 {
            return Err("permutation_count must be at least 1".into());
        }
        if self.shingle_width == 0 {
            return Err("shingle_width must be at least 1".into());
        }
        if self.bands == 0 || self.rows == 0 || self.bands * self.rows > self.permutation_count {
            return Err(format!(
                "bands ({}) x rows ({}) must be positive and fit in permutation_count ({})",
                self.bands, self.rows, self.permutation_count
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(format!("threshold {} outside [0, 1]", self.threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub permutation_count: usize,
    pub shingle_width: usize,
    pub hash_seed: u64,
    pub values: Vec<u64>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("signatures are not comparable: ({0}) vs ({1})")]
pub struct SignatureMismatch(String, String);

/// Lowercased, whitespace-tokenized word n-grams. Texts shorter than the
/// width produce a single shingle of all their tokens; empty texts produce none.
pub fn shingles(text: &str, width: usize) -> Vec<String> {
    let lower = text.to_lowercase();
    let tokens: Vec<&str> = lower.split_whitespace().collect();
    if tokens.is_empty() {
        return Vec::new();
    }
    if tokens.len() < width {
        return vec![tokens.join(" ")];
    }
    tokens.windows(width).map(|w| w.join(" ")).collect()
}

#[derive(Debug, Clone)]
pub struct MinHasher {
    cfg: MinHashConfig,
    coefficients: Vec<(u64, u64)>,
}

impl MinHasher {
    pub fn new(cfg: &MinHashConfig) -> Result<Self, String> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.hash_seed);
        let coefficients = (0..cfg.permutation_count)
            .map(|_| (rng.gen_range(1..MERSENNE_61), rng.gen_range(0..MERSENNE_61)))
            .collect();
        Ok(MinHasher { cfg: cfg.clone(), coefficients })
    }

    pub fn config(&self) -> &MinHashConfig {
        &self.cfg
    }

    pub fn signature(&self, text: &str) -> MinHashSignature {
        self.signature_from_shingles(shingles(text, self.cfg.shingle_width))
    }

    pub fn signature_from_shingles<I, S>(&self, shingles: I) -> MinHashSignature
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let hashes: HashSet<u64> =
            shingles.into_iter().map(|s| xxh3_64(s.as_ref().as_bytes()) % MERSENNE_61).collect();
        let values = if hashes.is_empty() {
            vec![EMPTY_SLOT; self.cfg.permutation_count]
        } else {
            self.coefficients
                .iter()
                .map(|&(a, b)| {
                    hashes
                        .iter()
                        .map(|&x| permute(a, b, x))
                        .min()
                        .expect("non-empty")
                })
                .collect()
        };
        MinHashSignature {
            permutation_count: self.cfg.permutation_count,
            shingle_width: self.cfg.shingle_width,
            hash_seed: self.cfg.hash_seed,
            values,
        }
    }
}

fn permute(a: u64, b: u64, x: u64) -> u64 {
    ((a as u128 * x as u128 + b as u128) % MERSENNE_61 as u128) as u64
}

pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64, SignatureMismatch> {
    let describe = |s: &MinHashSignature| {
        format!("perms={} width={} seed={}", s.permutation_count, s.shingle_width, s.hash_seed)
    };
    if a.permutation_count != b.permutation_count
        || a.shingle_width != b.shingle_width
        || a.hash_seed != b.hash_seed
        || a.values.len() != b.values.len()
    {
        return Err(SignatureMismatch(describe(a), describe(b)));
    }
    let equal = a.values.iter().zip(&b.values).filter(|(x, y)| x == y).count();
    Ok(equal as f64 / a.values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hasher(seed: u64) -> MinHasher {
        MinHasher::new(&MinHashConfig { hash_seed: seed, ..Default::default() }).unwrap()
    }

    fn exact_jaccard(a: &[&str], b: &[&str]) -> f64 {
        let a: HashSet<_> = a.iter().collect();
        let b: HashSet<_> = b.iter().collect();
        a.intersection(&b).count() as f64 / a.union(&b).count() as f64
    }

    #[test]
    fn shingles_are_lowercased_word_windows() {
        assert_eq!(shingles("A b C", 2), vec!["a b", "b c"]);
        assert_eq!(shingles("one two", 5), vec!["one two"]);
        assert!(shingles("   ", 5).is_empty());
    }

    #[test]
    fn identical_texts_have_identical_signatures() {
        let h = hasher(1);
        let a = h.signature("the same text again and again for hashing");
        assert_eq!(a, h.signature("the same text again and again for hashing"));
        assert_eq!(a.values.len(), 256);
        assert_eq!(estimate_jaccard(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn empty_text_yields_sentinel() {
        let sig = hasher(1).signature("");
        assert!(sig.values.iter().all(|&v| v == EMPTY_SLOT));
    }

    #[test]
    fn four_element_sets_estimate_point_six() {
        let a = ["a", "b", "c", "d"];
        let b = ["b", "c", "d", "e"];
        let exact = exact_jaccard(&a, &b);
        assert!((exact - 0.6).abs() < 1e-12);
        let trials = 100;
        let mean: f64 = (0..trials)
            .map(|seed| {
                let h = hasher(seed);
                estimate_jaccard(&h.signature_from_shingles(a), &h.signature_from_shingles(b)).unwrap()
            })
            .sum::<f64>()
            / trials as f64;
        assert!((0.55..=0.65).contains(&mean), "mean estimate {mean}");
    }

    #[test]
    fn disjoint_sets_estimate_near_zero() {
        let a: Vec<String> = (0..60).map(|i| format!("left{i}")).collect();
        let b: Vec<String> = (0..60).map(|i| format!("right{i}")).collect();
        let mean: f64 = (0..20)
            .map(|seed| {
                let h = hasher(seed);
                estimate_jaccard(&h.signature_from_shingles(&a), &h.signature_from_shingles(&b)).unwrap()
            })
            .sum::<f64>()
            / 20.0;
        assert!(mean <= 0.05, "{mean}");
    }

    #[test]
    fn mismatched_configs_do_not_compare() {
        let a = hasher(1).signature("x y z");
        let other = MinHasher::new(&MinHashConfig { permutation_count: 128, bands: 16, ..Default::default() })
            .unwrap()
            .signature("x y z");
        assert!(estimate_jaccard(&a, &other).is_err());
        let b = hasher(2).signature("x y z");
        assert!(estimate_jaccard(&a, &b).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MinHashConfig::default().validate().is_ok());
        assert!(MinHashConfig { permutation_count: 0, ..Default::default() }.validate().is_err());
        assert!(MinHashConfig { bands: 64, ..Default::default() }.validate().is_err());
        assert!(MinHashConfig { threshold: 1.5, ..Default::default() }.validate().is_err());
    }
}
