//! Distractor-scaled identification and verification.
//!
//! Identification trials are ordered pairs `(p, g)` of distinct probe images
//! of one identity. The gallery is `g` plus the first `s` distractors of a
//! seeded permutation, so smaller galleries are prefixes of larger ones.
//! A trial succeeds at rank `k` when fewer than `k` distractors are at least
//! as close to `p` as `g` is; ties count against the genuine match.
//!
//! Verification pools genuine distances (same-identity probe pairs) and
//! impostor distances (probe to distractor pairs, sampled down to a cap)
//! and reports (FAR, TAR) at every distinct distance threshold.

use std::collections::BTreeMap;

use rand::seq::{index::sample, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::euclidean;
use crate::error::{Error, Result};
use crate::model::EmbeddingSet;
use crate::rng::substream;

/// Default cap on sampled impostor pairs.
pub const DEFAULT_IMPOSTOR_CAP: usize = 1_000_000;

/// Labeled probe images, at least two per identity.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    set: EmbeddingSet,
    /// Row indices per label, labels ascending.
    identities: BTreeMap<String, Vec<usize>>,
}

impl ProbeSet {
    pub fn new(set: EmbeddingSet) -> Result<Self> {
        let mut identities: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in set.records().iter().enumerate() {
            let label = r
                .label
                .clone()
                .ok_or_else(|| Error::Unlabeled(r.face_id.clone()))?;
            identities.entry(label).or_default().push(i);
        }
        if let Some((label, rows)) = identities.iter().find(|(_, rows)| rows.len() < 2) {
            return Err(Error::IdentityTooSmall {
                label: label.clone(),
                count: rows.len(),
            });
        }
        Ok(Self { set, identities })
    }

    pub fn embeddings(&self) -> &EmbeddingSet {
        &self.set
    }

    pub fn identities(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.identities
    }

    fn check_disjoint(&self, distractors: &EmbeddingSet) -> Result<()> {
        for r in distractors.records() {
            if let Some(label) = &r.label {
                if self.identities.contains_key(label) {
                    return Err(Error::LabelOverlap(label.clone()));
                }
            }
        }
        if !distractors.is_empty() && distractors.dim() != self.set.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.set.dim(),
                actual: distractors.dim(),
            });
        }
        Ok(())
    }

    /// Ordered `(probe, genuine)` trial pairs.
    fn trials(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for rows in self.identities.values() {
            for &p in rows {
                out.extend(rows.iter().filter(|&&g| g != p).map(|&g| (p, g)));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRate {
    pub k: usize,
    pub rate: f64,
}

/// Identification rates at one distractor scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentificationRow {
    pub scale: usize,
    pub trials: usize,
    pub rates: Vec<RankRate>,
}

impl IdentificationRow {
    pub fn rate(&self, k: usize) -> Option<f64> {
        self.rates.iter().find(|r| r.k == k).map(|r| r.rate)
    }
}

/// Seeded permutation of distractor rows; scale `s` uses its first `s` entries.
pub fn distractor_order(distractors: &EmbeddingSet, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..distractors.len()).collect();
    order.shuffle(&mut substream(seed, "eval-distractors"));
    order
}

/// Rank-k identification rates at each distractor scale.
pub fn identification(
    probes: &ProbeSet,
    distractors: &EmbeddingSet,
    scales: &[usize],
    k_values: &[usize],
    seed: u64,
) -> Result<Vec<IdentificationRow>> {
    probes.check_disjoint(distractors)?;
    let max_scale = scales.iter().copied().max().unwrap_or(0);
    if max_scale > distractors.len() {
        return Err(Error::Insufficient {
            requested: max_scale,
            available: distractors.len(),
        });
    }
    let order = distractor_order(distractors, seed);
    let gallery = &order[..max_scale];
    let mut sorted_scales: Vec<usize> = scales.to_vec();
    sorted_scales.sort_unstable();
    sorted_scales.dedup();

    let set = probes.embeddings();
    let by_probe: BTreeMap<usize, Vec<usize>> =
        probes
            .trials()
            .into_iter()
            .fold(BTreeMap::new(), |mut m, (p, g)| {
                m.entry(p).or_insert_with(Vec::new).push(g);
                m
            });
    let trials: usize = by_probe.values().map(Vec::len).sum();

    // successes[scale][k]
    let successes = by_probe
        .par_iter()
        .map(|(&p, genuines)| {
            let probe = set.row(p);
            let to_distractors: Vec<f64> = gallery
                .iter()
                .map(|&d| euclidean(probe, distractors.row(d)))
                .collect();
            let mut counts = vec![vec![0usize; k_values.len()]; sorted_scales.len()];
            for &g in genuines {
                let genuine = euclidean(probe, set.row(g));
                let mut closer = 0usize;
                let mut seen = 0usize;
                for (si, &s) in sorted_scales.iter().enumerate() {
                    closer += to_distractors[seen..s]
                        .iter()
                        .filter(|&&d| d <= genuine)
                        .count();
                    seen = s;
                    for (ki, &k) in k_values.iter().enumerate() {
                        if closer < k {
                            counts[si][ki] += 1;
                        }
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![vec![0usize; k_values.len()]; sorted_scales.len()],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        );

    Ok(sorted_scales
        .iter()
        .zip(successes)
        .map(|(&scale, row)| IdentificationRow {
            scale,
            trials,
            rates: k_values
                .iter()
                .zip(row)
                .map(|(&k, hits)| RankRate {
                    k,
                    rate: hits as f64 / trials as f64,
                })
                .collect(),
        })
        .collect())
}

/// Scales `10, 100, ...` up to `max_scale`, ending with `max_scale` itself.
pub fn decade_scales(max_scale: usize) -> Vec<usize> {
    let mut scales = Vec::new();
    let mut s = 10usize;
    while s <= max_scale {
        scales.push(s);
        s = s.saturating_mul(10);
    }
    if scales.last() != Some(&max_scale) {
        scales.push(max_scale);
    }
    scales
}

/// Rank-1 and rank-10 identification at decade scales up to `max_scale`.
pub fn scale_sweep(
    probes: &ProbeSet,
    distractors: &EmbeddingSet,
    max_scale: usize,
    seed: u64,
) -> Result<Vec<IdentificationRow>> {
    identification(
        probes,
        distractors,
        &decade_scales(max_scale),
        &[1, 10],
        seed,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Pairs at distance `<= threshold` are accepted.
    pub threshold: f64,
    pub far: f64,
    pub tar: f64,
}

/// Genuine and impostor distances used for verification.
#[derive(Clone, Debug, PartialEq)]
pub struct PairScores {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

/// Collects genuine pair distances and (capped, sampled) impostor distances.
pub fn pair_scores(
    probes: &ProbeSet,
    distractors: &EmbeddingSet,
    impostor_cap: usize,
    seed: u64,
) -> Result<PairScores> {
    probes.check_disjoint(distractors)?;
    let set = probes.embeddings();
    let mut genuine = Vec::new();
    for rows in probes.identities().values() {
        for (a, &i) in rows.iter().enumerate() {
            for &j in &rows[a + 1..] {
                genuine.push(euclidean(set.row(i), set.row(j)));
            }
        }
    }
    if genuine.is_empty() {
        return Err(Error::NoGenuinePairs);
    }
    let n_dis = distractors.len();
    let total = set.len() * n_dis;
    let pair = |k: usize| euclidean(set.row(k / n_dis.max(1)), distractors.row(k % n_dis.max(1)));
    let impostor: Vec<f64> = if total <= impostor_cap {
        (0..total).into_par_iter().map(pair).collect()
    } else {
        let mut picked =
            sample(&mut substream(seed, "eval-impostors"), total, impostor_cap).into_vec();
        picked.sort_unstable();
        picked.into_par_iter().map(pair).collect()
    };
    Ok(PairScores { genuine, impostor })
}

/// (FAR, TAR) at every distinct score, thresholds ascending.
pub fn roc_curve(scores: &PairScores) -> Vec<RocPoint> {
    let mut pooled: Vec<(f64, bool)> = scores
        .genuine
        .iter()
        .map(|&d| (d, true))
        .chain(scores.impostor.iter().map(|&d| (d, false)))
        .collect();
    pooled.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let (n_gen, n_imp) = (scores.genuine.len() as f64, scores.impostor.len() as f64);
    let rate = |hits: usize, n: f64| if n == 0.0 { 0.0 } else { hits as f64 / n };
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pooled.len() {
        let threshold = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == threshold {
            if pooled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push(RocPoint {
            threshold,
            far: rate(fp, n_imp),
            tar: rate(tp, n_gen),
        });
    }
    out
}

pub fn verification(
    probes: &ProbeSet,
    distractors: &EmbeddingSet,
    impostor_cap: usize,
    seed: u64,
) -> Result<Vec<RocPoint>> {
    Ok(roc_curve(&pair_scores(
        probes,
        distractors,
        impostor_cap,
        seed,
    )?))
}

/// Best TAR among operating points with FAR at most `far`.
pub fn tar_at_far(curve: &[RocPoint], far: f64) -> f64 {
    curve
        .iter()
        .filter(|p| p.far <= far)
        .map(|p| p.tar)
        .fold(0.0, f64::max)
}

/// Rank-1/rank-10 row of an [`EvalReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub scale: usize,
    pub trials: usize,
    pub rank_1: f64,
    pub rank_10: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub probe_images: usize,
    pub probe_identities: usize,
    pub distractor_pool: usize,
    pub identification: Vec<ScaleRow>,
    pub verification: Vec<RocPoint>,
}

/// Scale sweep plus verification against the full distractor pool.
pub fn evaluate(
    probes: &ProbeSet,
    distractors: &EmbeddingSet,
    max_scale: usize,
    impostor_cap: usize,
    seed: u64,
) -> Result<EvalReport> {
    let rows = scale_sweep(probes, distractors, max_scale, seed)?;
    let verification = verification(probes, distractors, impostor_cap, seed)?;
    Ok(EvalReport {
        seed,
        probe_images: probes.embeddings().len(),
        probe_identities: probes.identities().len(),
        distractor_pool: distractors.len(),
        identification: rows
            .into_iter()
            .map(|r| ScaleRow {
                scale: r.scale,
                trials: r.trials,
                rank_1: r.rate(1).unwrap_or(0.0),
                rank_10: r.rate(10).unwrap_or(0.0),
            })
            .collect(),
        verification,
    })
}

impl EvalReport {
    /// Identification curve as CSV.
    pub fn identification_csv(&self) -> String {
        let mut out = String::from("scale,rank_1,rank_10\n");
        for r in &self.identification {
            out.push_str(&format!("{},{},{}\n", r.scale, r.rank_1, r.rank_10));
        }
        out
    }

    /// ROC as CSV.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("threshold,far,tar\n");
        for p in &self.verification {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.far, p.tar));
        }
        out
    }
}
