//! Exact Euclidean distances, accumulated in double precision.

use crate::error::{Error, Result};

/// Euclidean distance between two equal-length rows.
#[inline]
pub fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Dense symmetric distance matrix with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Per-row sums: how much distance each point contributes.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Mean over the `n(n-1)/2` unordered pairs.
    pub fn mean_pairwise(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::TooFewRows(self.n));
        }
        let mut total = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                total += self.get(i, j);
            }
        }
        Ok(total / pair_count(self.n) as f64)
    }

    /// Mean pairwise distance restricted to a subset of indices.
    pub fn mean_pairwise_of(&self, subset: &[usize]) -> Result<f64> {
        if subset.len() < 2 {
            return Err(Error::TooFewRows(subset.len()));
        }
        let mut total = 0.0;
        for (a, &i) in subset.iter().enumerate() {
            for &j in &subset[a + 1..] {
                total += self.get(i, j);
            }
        }
        Ok(total / pair_count(subset.len()) as f64)
    }
}

pub(crate) fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// All-pairs Euclidean distances between `rows`.
pub fn pairwise_distance_matrix<R: AsRef<[f32]>>(rows: &[R]) -> DistanceMatrix {
    let n = rows.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(rows[i].as_ref(), rows[j].as_ref());
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix { n, data }
}

/// Average Euclidean distance over all unordered pairs of rows.
pub fn mean_pairwise_distance<R: AsRef<[f32]>>(rows: &[R]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::TooFewRows(rows.len()));
    }
    pairwise_distance_matrix(rows).mean_pairwise()
}
