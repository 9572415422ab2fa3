use serde::{Deserialize, Serialize};

use crate::model::{EmbeddingSet, IdentityCluster};

/// Where every input face ended up.
///
/// `total_faces_in` always equals the sum of the five disposition counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub total_faces_in: usize,
    pub faces_kept: usize,
    /// Faces in components smaller than the minimum identity size.
    pub dropped_below_min_size: usize,
    /// Faces ejected from clusters by inner-cluster purification.
    pub ejected_as_impurities: usize,
    /// Remaining faces of clusters rejected after purification.
    pub dropped_in_rejected_clusters: usize,
    pub accounts_skipped_small: usize,
    pub faces_in_skipped_accounts: usize,
    pub transitive_constraint_violations: usize,
}

/// Shares of discarded faces per reason, in percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscardBreakdown {
    pub below_min_size: f64,
    pub ejected_as_impurities: f64,
    pub in_rejected_clusters: f64,
    pub in_skipped_accounts: f64,
}

impl AuditReport {
    pub fn faces_discarded(&self) -> usize {
        self.dropped_below_min_size
            + self.ejected_as_impurities
            + self.dropped_in_rejected_clusters
            + self.faces_in_skipped_accounts
    }

    pub fn is_balanced(&self) -> bool {
        self.total_faces_in == self.faces_kept + self.faces_discarded()
    }

    /// `None` when nothing was discarded.
    pub fn discard_breakdown(&self) -> Option<DiscardBreakdown> {
        let total = self.faces_discarded();
        if total == 0 {
            return None;
        }
        let pct = |v: usize| 100.0 * v as f64 / total as f64;
        Some(DiscardBreakdown {
            below_min_size: pct(self.dropped_below_min_size),
            ejected_as_impurities: pct(self.ejected_as_impurities),
            in_rejected_clusters: pct(self.dropped_in_rejected_clusters),
            in_skipped_accounts: pct(self.faces_in_skipped_accounts),
        })
    }
}

/// Size statistics of the accepted identities. Order statistics are `None`
/// for an empty dataset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub identity_count: usize,
    pub face_count: usize,
    pub mean_faces_per_identity: Option<f64>,
    pub median_faces_per_identity: Option<f64>,
    pub min_faces_per_identity: Option<usize>,
    pub max_faces_per_identity: Option<usize>,
}

impl DatasetStats {
    pub fn from_sizes(sizes: &[usize]) -> Self {
        let face_count = sizes.iter().sum();
        let as_f64: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
        Self {
            identity_count: sizes.len(),
            face_count,
            mean_faces_per_identity: (!sizes.is_empty())
                .then(|| face_count as f64 / sizes.len() as f64),
            median_faces_per_identity: crate::stats::median(&as_f64).ok(),
            min_faces_per_identity: sizes.iter().copied().min(),
            max_faces_per_identity: sizes.iter().copied().max(),
        }
    }
}

/// Statistics over the accepted clusters in `clusters`.
pub fn compute_stats(clusters: &[IdentityCluster]) -> DatasetStats {
    let sizes: Vec<usize> = clusters
        .iter()
        .filter(|c| c.is_accepted())
        .map(IdentityCluster::len)
        .collect();
    DatasetStats::from_sizes(&sizes)
}

/// One line of `clusters.jsonl`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub id: String,
    pub account_id: String,
    pub face_ids: Vec<String>,
}

impl ClusterRecord {
    pub fn from_cluster(cluster: &IdentityCluster, set: &EmbeddingSet) -> Self {
        Self {
            id: cluster.id.clone(),
            account_id: cluster.account_id.clone(),
            face_ids: cluster
                .members
                .iter()
                .map(|&i| set.record(i).face_id.clone())
                .collect(),
        }
    }
}

/// One line of `purification.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurificationRecord {
    pub cluster_id: String,
    pub initial_size: usize,
    pub ejected_face_ids: Vec<String>,
    pub final_status: crate::purify::PurificationStatus,
    pub flagged_initially: bool,
    pub below_min_size: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_examples() {
        let s = DatasetStats::from_sizes(&[3, 3, 4]);
        assert_eq!(s.identity_count, 3);
        assert_eq!(s.face_count, 10);
        assert_eq!(s.mean_faces_per_identity, Some(10.0 / 3.0));
        assert_eq!(s.median_faces_per_identity, Some(3.0));
        assert_eq!(s.min_faces_per_identity, Some(3));
        assert_eq!(s.max_faces_per_identity, Some(4));

        let empty = DatasetStats::from_sizes(&[]);
        assert_eq!(empty.identity_count, 0);
        assert_eq!(empty.mean_faces_per_identity, None);
        assert_eq!(empty.median_faces_per_identity, None);
        assert_eq!(empty.min_faces_per_identity, None);
    }

    #[test]
    fn breakdown_sums_to_hundred() {
        let a = AuditReport {
            total_faces_in: 100,
            faces_kept: 30,
            dropped_below_min_size: 40,
            ejected_as_impurities: 5,
            dropped_in_rejected_clusters: 15,
            accounts_skipped_small: 2,
            faces_in_skipped_accounts: 10,
            transitive_constraint_violations: 0,
        };
        assert!(a.is_balanced());
        let b = a.discard_breakdown().unwrap();
        let total = b.below_min_size
            + b.ejected_as_impurities
            + b.in_rejected_clusters
            + b.in_skipped_accounts;
        assert!((total - 100.0).abs() < 1e-9);
        assert_eq!(AuditReport::default().discard_breakdown(), None);
    }
}
