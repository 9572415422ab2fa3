//! Threshold tuning against synthetic ground truth.
//!
//! Purity is the modal-label fraction over faces in accepted clusters:
//! each cluster contributes the count of its most frequent real label, and
//! distractor faces never earn credit. A run that keeps no faces has
//! purity 0. Fraction kept is the share of all input faces (distractors
//! included) that end up in accepted clusters.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::cluster_account;
use crate::config::CurationConfig;
use crate::error::{Error, Result};
use crate::model::{EmbeddingSet, IdentityCluster};
use crate::pipeline::{assemble, filter_accounts};
use crate::rng::derive_seed;
use crate::synth::{generate_synthetic, SyntheticSpec};

/// Modal-label purity of the accepted clusters.
pub fn purity(clusters: &[IdentityCluster], set: &EmbeddingSet) -> Result<f64> {
    let mut total = 0usize;
    let mut modal = 0usize;
    for c in clusters.iter().filter(|c| c.is_accepted()) {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for &i in &c.members {
            let r = set.record(i);
            let label = r
                .label
                .as_deref()
                .ok_or_else(|| Error::Unlabeled(r.face_id.clone()))?;
            if !r.is_noise() {
                *counts.entry(label).or_default() += 1;
            }
        }
        total += c.members.len();
        modal += counts.values().copied().max().unwrap_or(0);
    }
    Ok(if total == 0 {
        0.0
    } else {
        modal as f64 / total as f64
    })
}

/// Faces in accepted clusters over all input faces.
pub fn fraction_kept(clusters: &[IdentityCluster], total_faces: usize) -> Result<f64> {
    if total_faces == 0 {
        return Err(Error::EmptyInput);
    }
    let kept: usize = clusters
        .iter()
        .filter(|c| c.is_accepted())
        .map(IdentityCluster::len)
        .sum();
    Ok(kept as f64 / total_faces as f64)
}

/// Purity and fraction kept of one curation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub purity: f64,
    pub fraction_kept: f64,
}

/// Curates a labeled corpus and scores it.
pub fn score_run(set: &EmbeddingSet, config: &CurationConfig, purify: bool) -> Result<RunScore> {
    let run = crate::pipeline::curate(set, config, purify)?;
    Ok(RunScore {
        purity: purity(&run.clusters, set)?,
        fraction_kept: fraction_kept(&run.clusters, set.len())?,
    })
}

/// Inclusive grid `lo, lo + step, ...` up to `hi`.
pub fn grid_values(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) || !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::InvalidConfig(format!(
            "invalid range [{lo}, {hi}] with step {step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// Mean purity and fraction kept over an (alpha, beta) grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `purity[a][b]` for `alphas[a]`, `betas[b]`.
    pub purity: Vec<Vec<f64>>,
    pub fraction_kept: Vec<Vec<f64>>,
    pub trials_per_cell: usize,
    pub selected: (f64, f64),
}

impl SweepResult {
    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.alphas
            .iter()
            .flat_map(|&a| self.betas.iter().map(move |&b| (a, b)))
            .collect()
    }

    /// Index of the best cell: highest purity, then highest fraction kept,
    /// then smallest alpha, then smallest beta.
    pub fn argmax(purity: &[Vec<f64>], kept: &[Vec<f64>]) -> (usize, usize) {
        let mut best = (0, 0);
        for (a, row) in purity.iter().enumerate() {
            for (b, &p) in row.iter().enumerate() {
                let (pa, pb) = best;
                let better =
                    p > purity[pa][pb] || (p == purity[pa][pb] && kept[a][b] > kept[pa][pb]);
                if better {
                    best = (a, b);
                }
            }
        }
        best
    }

    /// Renders one surface as CSV: rows are alphas, columns betas.
    pub fn surface_csv(&self, surface: &[Vec<f64>]) -> String {
        let mut out = String::from("alpha");
        for b in &self.betas {
            out.push_str(&format!(",{b}"));
        }
        out.push('\n');
        for (a, row) in self.alphas.iter().zip(surface) {
            out.push_str(&a.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Seed of trial `t` of an experiment; shared across grid cells and
/// distractor ratios so comparisons are paired.
pub fn trial_seed(base: u64, t: usize) -> u64 {
    derive_seed(base, "trial", t as u64)
}

/// Sweeps alpha and beta over inclusive ranges with a common step.
///
/// Every cell is evaluated on the same `trials` corpora drawn from `spec`.
/// Clustering does not depend on alpha, so each (beta, trial) pair is
/// clustered once and purified for every alpha.
pub fn sweep(
    spec: &SyntheticSpec,
    base: &CurationConfig,
    alpha_range: (f64, f64),
    beta_range: (f64, f64),
    step: f64,
    trials: usize,
) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let alphas = grid_values(alpha_range.0, alpha_range.1, step)?;
    let betas = grid_values(beta_range.0, beta_range.1, step)?;
    let corpora = (0..trials)
        .into_par_iter()
        .map(|t| generate_synthetic(&spec.with_seed(trial_seed(spec.seed, t))))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..betas.len())
        .flat_map(|b| (0..trials).map(move |t| (b, t)))
        .collect();
    // scores[job][alpha]
    let scores = jobs
        .par_iter()
        .map(|&(b, t)| {
            let set = &corpora[t];
            let cfg = CurationConfig {
                beta: betas[b],
                ..base.clone()
            };
            cfg.validate()?;
            let filter = filter_accounts(set.accounts(), cfg.min_account_photos);
            let results = filter
                .kept
                .iter()
                .map(|(_, rows)| cluster_account(set, rows, &cfg))
                .collect::<Result<Vec<_>>>()?;
            alphas
                .iter()
                .map(|&alpha| {
                    let cfg = CurationConfig {
                        alpha,
                        ..cfg.clone()
                    };
                    let run = assemble(set, &cfg, &filter, results.clone(), true)?;
                    Ok(RunScore {
                        purity: purity(&run.clusters, set)?,
                        fraction_kept: fraction_kept(&run.clusters, set.len())?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut purity_surface = vec![vec![0.0; betas.len()]; alphas.len()];
    let mut kept_surface = purity_surface.clone();
    for (&(b, _), per_alpha) in jobs.iter().zip(&scores) {
        for (a, s) in per_alpha.iter().enumerate() {
            purity_surface[a][b] += s.purity;
            kept_surface[a][b] += s.fraction_kept;
        }
    }
    for row in purity_surface.iter_mut().chain(kept_surface.iter_mut()) {
        for v in row {
            *v /= trials as f64;
        }
    }
    let (a, b) = SweepResult::argmax(&purity_surface, &kept_surface);
    Ok(SweepResult {
        selected: (alphas[a], betas[b]),
        alphas,
        betas,
        purity: purity_surface,
        fraction_kept: kept_surface,
        trials_per_cell: trials,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariancePoint {
    pub ratio: f64,
    pub purity: f64,
    pub fraction_kept: f64,
}

/// Mean purity per distractor ratio, with or without purification.
///
/// Trial `t` uses the same seed at every ratio, so identity faces are
/// identical across ratios and only the distractors change.
pub fn distractor_invariance(
    spec: &SyntheticSpec,
    config: &CurationConfig,
    ratios: &[f64],
    trials: usize,
    with_purification: bool,
) -> Result<Vec<InvariancePoint>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if ratios.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig(
            "ratios must be sorted ascending".into(),
        ));
    }
    ratios
        .iter()
        .map(|&ratio| {
            let scores = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let s = spec
                        .with_distractor_ratio(ratio)
                        .with_seed(trial_seed(spec.seed, t));
                    score_run(&generate_synthetic(&s)?, config, with_purification)
                })
                .collect::<Result<Vec<_>>>()?;
            let n = scores.len() as f64;
            Ok(InvariancePoint {
                ratio,
                purity: scores.iter().map(|s| s.purity).sum::<f64>() / n,
                fraction_kept: scores.iter().map(|s| s.fraction_kept).sum::<f64>() / n,
            })
        })
        .collect()
}
