use std::collections::BTreeMap;

use rand::seq::index::sample;

use super::{SeedDocument, StratumCounts};
use crate::seeding::derive_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsampleOutcome {
    pub kept: Vec<SeedDocument>,
    pub unknown_stratum: usize,
    pub over_quota: usize,
    pub strata: BTreeMap<String, StratumCounts>,
}

/// Chooses `min(quota, available)` documents per stratum uniformly without
/// replacement. Each stratum draws from its own RNG stream so results do not
/// depend on how other strata are populated. Input order is preserved.
pub fn stratified_subsample(
    docs: Vec<SeedDocument>,
    quotas: &BTreeMap<String, usize>,
    seed: u64,
) -> SubsampleOutcome {
    let mut by_stratum: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut unknown_stratum = 0;
    for (idx, doc) in docs.iter().enumerate() {
        if quotas.contains_key(&doc.stratum) {
            by_stratum.entry(doc.stratum.as_str()).or_default().push(idx);
        } else {
            unknown_stratum += 1;
        }
    }

    let mut keep = vec![false; docs.len()];
    let mut strata = BTreeMap::new();
    for (stratum, quota) in quotas {
        let members = by_stratum.get(stratum.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let take = (*quota).min(members.len());
        let mut rng = derive_rng(seed, &format!("subsample:{stratum}"), 0);
        for pick in sample(&mut rng, members.len(), take) {
            keep[members[pick]] = true;
        }
        strata.insert(stratum.clone(), StratumCounts { before: members.len(), after: take });
    }

    let kept: Vec<SeedDocument> = docs.into_iter().zip(&keep).filter_map(|(d, &k)| k.then_some(d)).collect();
    let known: usize = strata.values().map(|c| c.before).sum();
    SubsampleOutcome { over_quota: known - kept.len(), kept, unknown_stratum, strata }
}
