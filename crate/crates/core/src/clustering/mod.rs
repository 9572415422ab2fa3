//! Per-account constrained clustering.
//!
//! Faces of one account become graph nodes. An edge joins two faces when
//! they are not no-linked and their distance is strictly below `beta * D`,
//! where `D` is the mean pairwise distance over all faces of the account
//! (no-linked pairs included). Connected components of at least
//! `min_cluster_size` faces become identities; smaller ones are dropped.
//!
//! No-link constraints only suppress direct edges. Two faces of the same
//! photo can still end up in one component through other faces; those
//! pairs are counted as transitive violations but do not split the
//! component.

mod constraints;
mod union_find;

pub use constraints::{build_constraints, ConstraintMatrix};
pub use union_find::DisjointSet;

use serde::{Deserialize, Serialize};

use crate::config::CurationConfig;
use crate::distance::{pairwise_distance_matrix, DistanceMatrix};
use crate::error::{Error, Result};
use crate::model::{ClusterStatus, EmbeddingSet, IdentityCluster};

/// Undirected face graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceGraph {
    pub n: usize,
    /// Unordered pairs `(i, j)` with `i < j`, in lexicographic order.
    pub edges: Vec<(usize, usize)>,
}

/// Thresholds a precomputed distance matrix into a face graph.
pub fn face_graph_from_distances(
    distances: &DistanceMatrix,
    constraints: &ConstraintMatrix,
    beta: f64,
) -> Result<FaceGraph> {
    let n = distances.len();
    if constraints.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: constraints.len(),
        });
    }
    let threshold = beta * distances.mean_pairwise()?;
    let mut edges = Vec::new();
    for i in 0..n {
        for (j, &d) in distances.row(i).iter().enumerate().skip(i + 1) {
            if !constraints.no_link(i, j) && d < threshold {
                edges.push((i, j));
            }
        }
    }
    Ok(FaceGraph { n, edges })
}

pub fn build_face_graph<R: AsRef<[f32]>>(
    rows: &[R],
    constraints: &ConstraintMatrix,
    beta: f64,
) -> Result<FaceGraph> {
    face_graph_from_distances(&pairwise_distance_matrix(rows), constraints, beta)
}

/// Maximal connected sets, each sorted, ordered by smallest member.
pub fn connected_components(graph: &FaceGraph) -> Vec<Vec<usize>> {
    let mut ds = DisjointSet::new(graph.n);
    for &(i, j) in &graph.edges {
        ds.union(i, j);
    }
    ds.groups()
}

/// Components of one account split by the minimum size rule (local indices).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComponentSplit {
    pub kept: Vec<Vec<usize>>,
    pub dropped: Vec<Vec<usize>>,
    /// Same-photo pairs that share a kept component.
    pub transitive_violations: usize,
}

/// Clusters rows under explicit constraints. Fewer than two rows yields
/// nothing kept and every row dropped.
pub fn cluster_rows<R: AsRef<[f32]>>(
    rows: &[R],
    constraints: &ConstraintMatrix,
    beta: f64,
    min_cluster_size: usize,
) -> Result<(ComponentSplit, Option<DistanceMatrix>)> {
    if rows.len() < 2 {
        let dropped = (0..rows.len()).map(|i| vec![i]).collect();
        return Ok((
            ComponentSplit {
                dropped,
                ..Default::default()
            },
            None,
        ));
    }
    let distances = pairwise_distance_matrix(rows);
    let graph = face_graph_from_distances(&distances, constraints, beta)?;
    let mut split = ComponentSplit::default();
    for comp in connected_components(&graph) {
        if comp.len() >= min_cluster_size {
            for (a, &i) in comp.iter().enumerate() {
                split.transitive_violations += comp[a + 1..]
                    .iter()
                    .filter(|&&j| constraints.no_link(i, j))
                    .count();
            }
            split.kept.push(comp);
        } else {
            split.dropped.push(comp);
        }
    }
    Ok((split, Some(distances)))
}

/// Clustering result for one account.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AccountClustering {
    pub clusters: Vec<IdentityCluster>,
    /// Faces in components smaller than the minimum identity size.
    pub dropped_below_min_size: usize,
    pub transitive_violations: usize,
}

/// Clusters the faces at `rows` (indices into `set`), which must all
/// belong to one account.
///
/// Returned clusters hold sorted indices into `set` and are named
/// `<account_id>/<k>` in canonical component order.
pub fn cluster_account(
    set: &EmbeddingSet,
    rows: &[usize],
    config: &CurationConfig,
) -> Result<AccountClustering> {
    if rows.is_empty() {
        return Ok(AccountClustering::default());
    }
    let mut rows = rows.to_vec();
    rows.sort_unstable();
    let vectors = set.select_rows(&rows)?;
    let constraints = build_constraints(rows.iter().map(|&i| set.record(i)))?;
    let (split, distances) =
        cluster_rows(&vectors, &constraints, config.beta, config.min_cluster_size)?;
    let account_id = &set.record(rows[0]).account_id;
    let clusters = split
        .kept
        .iter()
        .enumerate()
        .map(|(k, comp)| {
            let mean = match (&distances, comp.len()) {
                (Some(d), 2..) => d.mean_pairwise_of(comp)?,
                _ => 0.0,
            };
            Ok(IdentityCluster {
                id: format!("{account_id}/{k}"),
                account_id: account_id.clone(),
                members: comp.iter().map(|&i| rows[i]).collect(),
                mean_pairwise_distance: mean,
                ejected: Vec::new(),
                status: ClusterStatus::Accepted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AccountClustering {
        clusters,
        dropped_below_min_size: split.dropped.iter().map(Vec::len).sum(),
        transitive_violations: split.transitive_violations,
    })
}
