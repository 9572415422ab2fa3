//! MAD-based cluster purification.
//!
//! Each cluster is summarised by its mean pairwise distance `d_i`. A cluster
//! is flagged impure when `|d_i - median(D)| / MAD(D) > alpha` over the
//! population `D`. Flagged clusters eject every face whose distance row sum
//! `v_j` satisfies `|v_j - median(v)| / MAD(v) > alpha`, in a single pass.
//! The population statistics are then recomputed and each purified cluster
//! is tested again; clusters still flagged, or shrunk below the minimum
//! identity size, are rejected. Unflagged clusters pass through untouched.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CurationConfig, PurificationScope};
use crate::distance::pairwise_distance_matrix;
use crate::error::{Error, Result};
use crate::model::{ClusterStatus, EmbeddingSet, IdentityCluster};
use crate::stats::RobustThreshold;

/// Median and MAD of per-cluster mean pairwise distances.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationStats {
    pub distances: Vec<f64>,
    pub median: f64,
    pub mad: f64,
}

impl PopulationStats {
    pub fn new(distances: Vec<f64>) -> Result<Self> {
        let (median, mad) = crate::stats::median_and_mad(&distances)?;
        Ok(Self {
            distances,
            median,
            mad,
        })
    }

    fn threshold(&self, alpha: f64, mad_epsilon: f64) -> RobustThreshold {
        RobustThreshold {
            median: self.median,
            mad: self.mad,
            alpha,
            mad_epsilon,
        }
    }
}

/// Indices of clusters whose mean distance is a robust outlier, ascending.
pub fn flag_impure_clusters(stats: &PopulationStats, alpha: f64, mad_epsilon: f64) -> Vec<usize> {
    let t = stats.threshold(alpha, mad_epsilon);
    stats
        .distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| t.is_outlier(d))
        .map(|(i, _)| i)
        .collect()
}

/// Local row indices kept and ejected by inner-cluster purification.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Purge {
    pub kept: Vec<usize>,
    pub ejected: Vec<usize>,
}

/// Ejects faces whose distance row sum is a robust outlier within the cluster.
pub fn purify_cluster<R: AsRef<[f32]>>(rows: &[R], alpha: f64, mad_epsilon: f64) -> Result<Purge> {
    if rows.len() < 2 {
        return Err(Error::TooFewRows(rows.len()));
    }
    let scores = pairwise_distance_matrix(rows).row_sums();
    let t = RobustThreshold::fit(&scores, alpha, mad_epsilon)?;
    let (ejected, kept): (Vec<usize>, Vec<usize>) =
        (0..rows.len()).partition(|&i| t.is_outlier(scores[i]));
    Ok(Purge { kept, ejected })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurificationStatus {
    AcceptedClean,
    AcceptedAfterPurification,
    RejectedImpure,
}

/// What purification did to one cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurificationOutcome {
    pub cluster_id: String,
    pub initial_size: usize,
    /// Row indices into the embedding set.
    pub ejected: Vec<usize>,
    pub final_status: PurificationStatus,
    pub flagged_initially: bool,
    /// Rejected because ejection left fewer than the minimum identity size.
    pub below_min_size: bool,
}

/// Purifies a population of clusters in place and reports each outcome.
///
/// Every cluster in `clusters` is assumed accepted on entry. An empty
/// population yields an empty report.
pub fn purify_population(
    clusters: &mut [IdentityCluster],
    set: &EmbeddingSet,
    config: &CurationConfig,
) -> Result<Vec<PurificationOutcome>> {
    if clusters.is_empty() {
        return Ok(Vec::new());
    }
    let (alpha, eps) = (config.alpha, config.mad_epsilon);
    let before = PopulationStats::new(clusters.iter().map(|c| c.mean_pairwise_distance).collect())?;
    let flagged = flag_impure_clusters(&before, alpha, eps);

    struct Purified {
        index: usize,
        kept: Vec<usize>,
        ejected: Vec<usize>,
        mean: f64,
    }
    let purified = flagged
        .par_iter()
        .map(|&index| {
            let members = &clusters[index].members;
            let rows = set.select_rows(members)?;
            let purge = if rows.len() >= 2 {
                purify_cluster(&rows, alpha, eps)?
            } else {
                Purge {
                    kept: (0..rows.len()).collect(),
                    ejected: Vec::new(),
                }
            };
            let kept: Vec<usize> = purge.kept.iter().map(|&i| members[i]).collect();
            let ejected: Vec<usize> = purge.ejected.iter().map(|&i| members[i]).collect();
            let mean = if kept.len() >= 2 {
                crate::distance::mean_pairwise_distance(&set.select_rows(&kept)?)?
            } else {
                0.0
            };
            Ok(Purified {
                index,
                kept,
                ejected,
                mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let min_size = config.min_cluster_size;
    let mut refreshed: Vec<f64> = clusters.iter().map(|c| c.mean_pairwise_distance).collect();
    let mut survives = vec![true; clusters.len()];
    for p in &purified {
        refreshed[p.index] = p.mean;
        survives[p.index] = p.kept.len() >= min_size;
    }
    let refreshed: Vec<f64> = refreshed
        .into_iter()
        .zip(&survives)
        .filter(|(_, &s)| s)
        .map(|(d, _)| d)
        .collect();
    let recheck = if refreshed.is_empty() {
        None
    } else {
        Some(PopulationStats::new(refreshed)?.threshold(alpha, eps))
    };

    let mut outcomes: Vec<PurificationOutcome> = clusters
        .iter()
        .map(|c| PurificationOutcome {
            cluster_id: c.id.clone(),
            initial_size: c.members.len(),
            ejected: Vec::new(),
            final_status: PurificationStatus::AcceptedClean,
            flagged_initially: false,
            below_min_size: false,
        })
        .collect();
    for p in purified {
        let cluster = &mut clusters[p.index];
        let outcome = &mut outcomes[p.index];
        outcome.flagged_initially = true;
        outcome.ejected = p.ejected.clone();
        cluster.members = p.kept;
        cluster.ejected = p.ejected;
        cluster.mean_pairwise_distance = p.mean;
        if cluster.members.len() < min_size {
            outcome.below_min_size = true;
            outcome.final_status = PurificationStatus::RejectedImpure;
            cluster.status = ClusterStatus::RejectedSmall;
        } else if recheck.is_some_and(|t| t.is_outlier(p.mean)) {
            outcome.final_status = PurificationStatus::RejectedImpure;
            cluster.status = ClusterStatus::RejectedImpure;
        } else {
            outcome.final_status = PurificationStatus::AcceptedAfterPurification;
            cluster.status = ClusterStatus::Accepted;
        }
    }
    Ok(outcomes)
}

/// Runs [`purify_population`] over the whole population or per account,
/// as configured. Outcomes follow the order of `clusters`.
pub fn purify_scoped(
    clusters: &mut [IdentityCluster],
    set: &EmbeddingSet,
    config: &CurationConfig,
) -> Result<Vec<PurificationOutcome>> {
    match config.purification_scope {
        PurificationScope::Global => purify_population(clusters, set, config),
        PurificationScope::PerAccount => {
            let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for (i, c) in clusters.iter().enumerate() {
                groups.entry(c.account_id.clone()).or_default().push(i);
            }
            let mut outcomes: Vec<Option<PurificationOutcome>> = vec![None; clusters.len()];
            for indices in groups.values() {
                let mut group: Vec<IdentityCluster> =
                    indices.iter().map(|&i| clusters[i].clone()).collect();
                let report = purify_population(&mut group, set, config)?;
                for ((&i, c), o) in indices.iter().zip(group).zip(report) {
                    clusters[i] = c;
                    outcomes[i] = Some(o);
                }
            }
            Ok(outcomes
                .into_iter()
                .map(|o| o.expect("every cluster grouped"))
                .collect())
        }
    }
}
