use std::collections::HashSet;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::model::EmbeddingSet;
use crate::pipeline::report::ClusterRecord;
use crate::rng::substream;

/// Samples `n` faces uniformly from accounts that contributed no accepted
/// cluster. Rows keep their corpus order.
pub fn extract_disjoint_distractors(
    corpus: &EmbeddingSet,
    clustered: &[ClusterRecord],
    n: usize,
    seed: u64,
) -> Result<EmbeddingSet> {
    let used: HashSet<&str> = clustered.iter().map(|c| c.account_id.as_str()).collect();
    let pool: Vec<usize> = (0..corpus.len())
        .filter(|&i| !used.contains(corpus.record(i).account_id.as_str()))
        .collect();
    if n > pool.len() {
        return Err(Error::Insufficient {
            requested: n,
            available: pool.len(),
        });
    }
    let mut rng = substream(seed, "distractors");
    let mut picked: Vec<usize> = sample(&mut rng, pool.len(), n)
        .into_iter()
        .map(|k| pool[k])
        .collect();
    picked.sort_unstable();
    corpus.subset(&picked)
}
