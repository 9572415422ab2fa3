//! Brute-force reference implementations used as test oracles.
//!
//! Nothing here calls into the library's statistics, distance or graph
//! code; each routine is the most direct reading of its definition.

#![allow(dead_code, clippy::needless_range_loop)]

use idcurate_core::EmbeddingSet;

pub fn dist(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for k in 0..a.len() {
        let d = a[k] as f64 - b[k] as f64;
        s += d * d;
    }
    s.sqrt()
}

/// Median by counting: the order statistic of rank r is the value x with
/// #{< x} <= r < #{<= x}.
pub fn median_ref(xs: &[f64]) -> f64 {
    let n = xs.len();
    let order_stat = |r: usize| -> f64 {
        for &x in xs {
            let below = xs.iter().filter(|&&y| y < x).count();
            let at_or_below = xs.iter().filter(|&&y| y <= x).count();
            if below <= r && r < at_or_below {
                return x;
            }
        }
        unreachable!("every rank has an order statistic")
    };
    if n % 2 == 1 {
        order_stat(n / 2)
    } else {
        (order_stat(n / 2 - 1) + order_stat(n / 2)) / 2.0
    }
}

pub fn mad_ref(xs: &[f64]) -> f64 {
    let m = median_ref(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m).abs()).collect();
    median_ref(&dev)
}

/// Robust z flags with the zero-MAD fallback.
pub fn outlier_flags_ref(xs: &[f64], alpha: f64, eps: f64) -> Vec<bool> {
    let m = median_ref(xs);
    let s = mad_ref(xs);
    xs.iter()
        .map(|x| {
            let dev = (x - m).abs();
            if s < eps {
                dev > eps
            } else {
                dev / s > alpha
            }
        })
        .collect()
}

/// Row sums of the within-cluster distance matrix.
pub fn row_sums_ref(rows: &[Vec<f32>]) -> Vec<f64> {
    rows.iter()
        .map(|a| rows.iter().map(|b| dist(a, b)).sum())
        .collect()
}

/// Indices ejected by inner-cluster purification.
pub fn ejected_ref(rows: &[Vec<f32>], alpha: f64, eps: f64) -> Vec<usize> {
    let v = row_sums_ref(rows);
    outlier_flags_ref(&v, alpha, eps)
        .into_iter()
        .enumerate()
        .filter(|(_, f)| *f)
        .map(|(i, _)| i)
        .collect()
}

/// O(N^2) threshold graph plus depth-first search. Returns kept
/// components (sorted, ordered by smallest member) and the dropped face count.
pub fn cluster_ref(
    rows: &[Vec<f32>],
    no_link: &dyn Fn(usize, usize) -> bool,
    beta: f64,
    min_size: usize,
) -> (Vec<Vec<usize>>, usize) {
    let n = rows.len();
    if n < 2 {
        return (vec![], n);
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            total += dist(&rows[i], &rows[j]);
            pairs += 1;
        }
    }
    let threshold = beta * (total / pairs as f64);
    let adjacent =
        |i: usize, j: usize| i != j && !no_link(i, j) && dist(&rows[i], &rows[j]) < threshold;
    let mut seen = vec![false; n];
    let mut kept = vec![];
    let mut dropped = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && adjacent(u, v) {
                    seen[v] = true;
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        if comp.len() >= min_size {
            kept.push(comp);
        } else {
            dropped += comp.len();
        }
    }
    kept.sort();
    (kept, dropped)
}

/// Rank of the genuine match when the gallery (genuine plus `gallery`
/// distractor rows) is fully sorted by distance, distractors first on ties.
pub fn genuine_rank_ref(probe: &[f32], genuine: &[f32], gallery: &[&[f32]]) -> usize {
    let mut entries: Vec<(f64, u8)> = gallery.iter().map(|g| (dist(probe, g), 0u8)).collect();
    entries.push((dist(probe, genuine), 1));
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    entries.iter().position(|e| e.1 == 1).unwrap() + 1
}

/// Rank-k rate by exhaustive gallery sorting.
pub fn identification_ref(
    probes: &EmbeddingSet,
    distractors: &EmbeddingSet,
    order: &[usize],
    scale: usize,
    k: usize,
) -> f64 {
    let gallery: Vec<&[f32]> = order[..scale].iter().map(|&d| distractors.row(d)).collect();
    let (mut hits, mut trials) = (0usize, 0usize);
    for p in 0..probes.len() {
        for g in 0..probes.len() {
            if p == g || probes.record(p).label != probes.record(g).label {
                continue;
            }
            trials += 1;
            if genuine_rank_ref(probes.row(p), probes.row(g), &gallery) <= k {
                hits += 1;
            }
        }
    }
    hits as f64 / trials as f64
}

/// (threshold, FAR, TAR) by direct counting at each distinct score.
pub fn roc_ref(genuine: &[f64], impostor: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut thresholds: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    thresholds
        .into_iter()
        .map(|t| {
            let tar = genuine.iter().filter(|&&d| d <= t).count() as f64 / genuine.len() as f64;
            let far = if impostor.is_empty() {
                0.0
            } else {
                impostor.iter().filter(|&&d| d <= t).count() as f64 / impostor.len() as f64
            };
            (t, far, tar)
        })
        .collect()
}

pub mod instances {
    use idcurate_core::FaceRecord;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// A cluster-like point set: a Gaussian blob, sometimes with far
    /// outliers, sometimes on a coarse integer grid so ties and zero MADs
    /// occur.
    pub fn cluster(rng: &mut ChaCha8Rng, size: usize, dim: usize) -> Vec<Vec<f32>> {
        let mode = rng.random_range(0..4);
        let spread = rng.random_range(0.1..5.0);
        let normal = Normal::new(0.0, spread).unwrap();
        let mut rows: Vec<Vec<f32>> = (0..size)
            .map(|_| match mode {
                0 => (0..dim).map(|_| rng.random_range(0..3) as f32).collect(),
                1 => {
                    // Mostly coincident points.
                    if rng.random_bool(0.7) {
                        vec![1.0; dim]
                    } else {
                        (0..dim).map(|_| normal.sample(rng) as f32).collect()
                    }
                }
                _ => (0..dim).map(|_| normal.sample(rng) as f32).collect(),
            })
            .collect();
        if mode == 3 {
            let outliers = rng.random_range(1..=3.min(size));
            for row in rows.iter_mut().take(outliers) {
                for v in row.iter_mut() {
                    *v += rng.random_range(5.0..50.0) * spread as f32;
                }
            }
        }
        rows
    }

    /// A population of per-cluster distances with occasional outliers and ties.
    pub fn population(rng: &mut ChaCha8Rng, size: usize) -> Vec<f64> {
        let tie = rng.random_bool(0.2);
        (0..size)
            .map(|_| {
                if tie && rng.random_bool(0.8) {
                    0.5
                } else if rng.random_bool(0.1) {
                    rng.random_range(2.0..20.0)
                } else {
                    rng.random_range(0.3..0.7)
                }
            })
            .collect()
    }

    /// One account of blob-structured faces with random photo collisions.
    pub fn account(rng: &mut ChaCha8Rng, max_faces: usize) -> (Vec<FaceRecord>, Vec<Vec<f32>>) {
        let n = rng.random_range(0..=max_faces);
        let dim = rng.random_range(2..=32);
        let blobs = rng.random_range(1..=8);
        let centers: Vec<Vec<f32>> = (0..blobs)
            .map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let spread = rng.random_range(0.05..3.0);
        let normal = Normal::new(0.0, spread).unwrap();
        let photos = rng.random_range(1..=n.max(1));
        let mut records = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let c = &centers[rng.random_range(0..blobs)];
            rows.push(c.iter().map(|&x| x + normal.sample(rng) as f32).collect());
            records.push(FaceRecord::new(
                format!("f{i}"),
                "acct",
                format!("p{}", rng.random_range(0..photos)),
            ));
        }
        (records, rows)
    }
}
