//! Robust location and spread statistics.
//!
//! The median of an even-length sample is the midpoint of the two middle
//! order statistics. The median absolute deviation (MAD) is the median of the
//! absolute deviations from the median, unscaled.

use crate::error::{Error, Result};

fn check(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Sample median.
///
/// ```
/// use idcurate_core::stats::median;
/// assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
/// assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
/// ```
pub fn median(values: &[f64]) -> Result<f64> {
    check(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(median_of_sorted(&sorted))
}

/// Median absolute deviation from the median.
pub fn mad(values: &[f64]) -> Result<f64> {
    Ok(median_and_mad(values)?.1)
}

/// Median and MAD in one pass over a single sorted copy.
pub fn median_and_mad(values: &[f64]) -> Result<(f64, f64)> {
    check(values)?;
    let mut scratch = values.to_vec();
    scratch.sort_unstable_by(f64::total_cmp);
    let center = median_of_sorted(&scratch);
    for (slot, v) in scratch.iter_mut().zip(values) {
        *slot = (v - center).abs();
    }
    scratch.sort_unstable_by(f64::total_cmp);
    Ok((center, median_of_sorted(&scratch)))
}

/// Robust z-test shared by cluster flagging and face ejection.
///
/// A value is an outlier when `|x - median| / mad > alpha`. When the MAD is
/// below `mad_epsilon` the ratio is undefined; any deviation above
/// `mad_epsilon` then counts as an outlier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustThreshold {
    pub median: f64,
    pub mad: f64,
    pub alpha: f64,
    pub mad_epsilon: f64,
}

impl RobustThreshold {
    pub fn fit(values: &[f64], alpha: f64, mad_epsilon: f64) -> Result<Self> {
        let (median, mad) = median_and_mad(values)?;
        Ok(Self {
            median,
            mad,
            alpha,
            mad_epsilon,
        })
    }

    pub fn is_outlier(&self, value: f64) -> bool {
        let deviation = (value - self.median).abs();
        if self.mad < self.mad_epsilon {
            deviation > self.mad_epsilon
        } else {
            deviation / self.mad > self.alpha
        }
    }
}
