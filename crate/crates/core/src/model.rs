//! Domain types shared by every stage.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label carried by synthetic distractor faces. Never counted as a real identity.
pub const NOISE_LABEL: &str = "__noise__";

/// Metadata for one detected face.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaceRecord {
    pub face_id: String,
    pub account_id: String,
    pub photo_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl FaceRecord {
    pub fn new(
        face_id: impl Into<String>,
        account_id: impl Into<String>,
        photo_id: impl Into<String>,
    ) -> Self {
        Self {
            face_id: face_id.into(),
            account_id: account_id.into(),
            photo_id: photo_id.into(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn is_noise(&self) -> bool {
        self.label.as_deref() == Some(NOISE_LABEL)
    }
}

/// Row-major feature matrix with one [`FaceRecord`] per row.
///
/// Vectors are stored as loaded; no normalization is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    records: Vec<FaceRecord>,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingSet {
    /// Builds a set, validating shape, finiteness and face_id uniqueness.
    pub fn new(records: Vec<FaceRecord>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: data.len() % dim,
            });
        }
        if data.len() / dim != records.len() {
            return Err(Error::RowCountMismatch {
                vectors: data.len() / dim,
                records: records.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i / dim));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.face_id.as_str()) {
                return Err(Error::DuplicateFaceId(r.face_id.clone()));
            }
        }
        Ok(Self { records, dim, data })
    }

    /// Builds a set from per-row vectors.
    pub fn from_rows(records: Vec<FaceRecord>, rows: Vec<Vec<f32>>) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(records, dim, data)
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            records: Vec::new(),
            dim: dim.max(1),
            data: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[FaceRecord] {
        &self.records
    }

    pub fn record(&self, i: usize) -> &FaceRecord {
        &self.records[i]
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    /// Raw row-major values.
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Borrowed rows for a subset of indices, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Vec<&[f32]>> {
        indices
            .iter()
            .map(|&i| {
                if i < self.len() {
                    Ok(self.row(i))
                } else {
                    Err(Error::IndexOutOfRange {
                        index: i,
                        len: self.len(),
                    })
                }
            })
            .collect()
    }

    /// New set holding copies of the given rows.
    pub fn subset(&self, indices: &[usize]) -> Result<EmbeddingSet> {
        let rows = self.select_rows(indices)?;
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for r in rows {
            data.extend_from_slice(r);
        }
        let records = indices.iter().map(|&i| self.records[i].clone()).collect();
        Ok(Self {
            records,
            dim: self.dim,
            data,
        })
    }

    /// Row indices grouped by account, accounts in ascending id order.
    pub fn accounts(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            out.entry(r.account_id.as_str()).or_default().push(i);
        }
        out
    }
}

/// Final state of an identity cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterStatus {
    Accepted,
    RejectedImpure,
    /// Purification shrank the cluster below the minimum identity size.
    RejectedSmall,
}

/// A set of faces from one account asserted to share one identity.
///
/// `members` and `ejected` hold row indices into the source [`EmbeddingSet`],
/// sorted ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCluster {
    pub id: String,
    pub account_id: String,
    pub members: Vec<usize>,
    pub mean_pairwise_distance: f64,
    pub ejected: Vec<usize>,
    pub status: ClusterStatus,
}

impl IdentityCluster {
    pub fn is_accepted(&self) -> bool {
        self.status == ClusterStatus::Accepted
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}
