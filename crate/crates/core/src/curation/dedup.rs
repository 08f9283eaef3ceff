use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::minhash::{estimate_jaccard, MinHashSignature, MinHasher};
use super::SeedDocument;

/// Strips trailing whitespace from every line.
pub fn normalize_for_exact(text: &str) -> String {
    text.lines().map(str::trim_end).collect::<Vec<_>>().join("\n")
}

/// Keeps the first occurrence of each normalized text.
pub fn exact_dedup(docs: Vec<SeedDocument>) -> Vec<SeedDocument> {
    let mut seen: HashSet<[u8; 32]> = HashSet::with_capacity(docs.len());
    docs.into_iter()
        .filter(|doc| seen.insert(Sha256::digest(normalize_for_exact(&doc.text).as_bytes()).into()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearDedupOutcome {
    /// Input order is preserved.
    pub survivors: Vec<SeedDocument>,
    /// Each group sorted by id; groups sorted by their first id.
    pub clusters: Vec<Vec<String>>,
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// LSH banding over MinHash signatures, verified against the configured
/// threshold. Connected components of verified pairs form a cluster; the
/// lexicographically smallest id in each cluster survives.
pub fn near_dedup(docs: Vec<SeedDocument>, hasher: &MinHasher) -> NearDedupOutcome {
    let cfg = hasher.config();
    let signatures: Vec<MinHashSignature> = docs.par_iter().map(|d| hasher.signature(&d.text)).collect();

    // One bucket map per band; bands are independent partitions.
    let candidates: BTreeSet<(usize, usize)> = (0..cfg.bands)
        .into_par_iter()
        .map(|band| {
            let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
            for (idx, sig) in signatures.iter().enumerate() {
                let slice = &sig.values[band * cfg.rows..(band + 1) * cfg.rows];
                let bytes: Vec<u8> = slice.iter().flat_map(|v| v.to_le_bytes()).collect();
                buckets.entry(xxh3_64_with_seed(&bytes, band as u64)).or_default().push(idx);
            }
            let mut pairs = Vec::new();
            for members in buckets.values().filter(|m| m.len() > 1) {
                for (i, &a) in members.iter().enumerate() {
                    for &b in &members[i + 1..] {
                        pairs.push((a.min(b), a.max(b)));
                    }
                }
            }
            pairs
        })
        .flatten()
        .collect();

    let mut sets = DisjointSet((0..docs.len()).collect());
    for (a, b) in candidates {
        let est = estimate_jaccard(&signatures[a], &signatures[b]).expect("same hasher");
        if est >= cfg.threshold {
            sets.union(a, b);
        }
    }

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for idx in 0..docs.len() {
        let root = sets.find(idx);
        groups.entry(root).or_default().push(idx);
    }
    let mut keep = vec![true; docs.len()];
    let mut clusters = Vec::new();
    for members in groups.values().filter(|m| m.len() > 1) {
        let winner = *members.iter().min_by(|&&a, &&b| docs[a].id.cmp(&docs[b].id)).expect("non-empty");
        for &m in members {
            keep[m] = m == winner;
        }
        let mut ids: Vec<String> = members.iter().map(|&m| docs[m].id.clone()).collect();
        ids.sort();
        clusters.push(ids);
    }
    clusters.sort();

    let survivors = docs.into_iter().zip(keep).filter_map(|(d, k)| k.then_some(d)).collect();
    NearDedupOutcome { survivors, clusters }
}
