use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::FaceRecord;

/// Symmetric no-link relation over the faces of one account.
///
/// `no_link(i, j) == true` means faces `i` and `j` may not be joined by an
/// edge. The diagonal is always set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl ConstraintMatrix {
    /// Only the diagonal is set.
    pub fn unconstrained(n: usize) -> Self {
        let mut bits = vec![false; n * n];
        for i in 0..n {
            bits[i * n + i] = true;
        }
        Self { n, bits }
    }

    /// Diagonal plus the given unordered pairs.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::unconstrained(n);
        for (i, j) in pairs {
            m.forbid(i, j);
        }
        m
    }

    pub fn forbid(&mut self, i: usize, j: usize) {
        self.bits[i * self.n + j] = true;
        self.bits[j * self.n + i] = true;
    }

    #[inline]
    pub fn no_link(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// No-link constraints for one account: faces sharing a photo may not link.
///
/// Fails if the faces come from more than one account.
pub fn build_constraints<'a>(
    faces: impl IntoIterator<Item = &'a FaceRecord>,
) -> Result<ConstraintMatrix> {
    let faces: Vec<&FaceRecord> = faces.into_iter().collect();
    if let Some(first) = faces.first() {
        if let Some(other) = faces.iter().find(|f| f.account_id != first.account_id) {
            return Err(Error::MixedAccounts {
                first: first.account_id.clone(),
                second: other.account_id.clone(),
            });
        }
    }
    let mut by_photo: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, f) in faces.iter().enumerate() {
        by_photo.entry(f.photo_id.as_str()).or_default().push(i);
    }
    let mut m = ConstraintMatrix::unconstrained(faces.len());
    for group in by_photo.values().filter(|g| g.len() > 1) {
        for (a, &i) in group.iter().enumerate() {
            for &j in &group[a + 1..] {
                m.forbid(i, j);
            }
        }
    }
    Ok(m)
}
