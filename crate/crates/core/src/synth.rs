//! Synthetic labeled corpora: isotropic identity blobs plus background
//! distractors, grouped into accounts and photos.
//!
//! Spreads are Euclidean norms, independent of dimension: faces lie at RMS
//! distance `intra_spread` from their identity center, centers are RMS
//! `inter_separation` apart, and distractors are drawn from the center
//! distribution widened by `background_scale`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EmbeddingSet, FaceRecord, NOISE_LABEL};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_identities: usize,
    /// Inclusive range of faces per identity.
    pub faces_per_identity: (usize, usize),
    pub embedding_dim: usize,
    pub intra_spread: f64,
    pub inter_separation: f64,
    /// Distractor faces per identity face.
    pub distractor_ratio: f64,
    /// Width of the distractor distribution relative to the center distribution.
    pub background_scale: f64,
    pub identities_per_account: usize,
    /// Photos per account holding two faces of different identities.
    pub multi_identity_photos: usize,
    /// Probability that a face shares a photo with an earlier face of its
    /// own identity.
    pub same_identity_photo_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// The "easy" spec: well separated identities, no distractors.
    fn default() -> Self {
        Self {
            n_identities: 100,
            faces_per_identity: (5, 10),
            embedding_dim: 32,
            intra_spread: 1.0,
            inter_separation: 10.0,
            distractor_ratio: 0.0,
            background_scale: 1.75,
            identities_per_account: 5,
            multi_identity_photos: 1,
            same_identity_photo_rate: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidSpec(m.into()));
        let (lo, hi) = self.faces_per_identity;
        if self.n_identities == 0 || lo == 0 || hi < lo {
            return fail("identity count and faces per identity must be positive, min <= max");
        }
        if self.embedding_dim == 0 || self.identities_per_account == 0 {
            return fail("embedding_dim and identities_per_account must be positive");
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.intra_spread)
            || !positive(self.inter_separation)
            || !positive(self.background_scale)
        {
            return fail("spreads must be positive");
        }
        if !(self.distractor_ratio.is_finite() && self.distractor_ratio >= 0.0) {
            return fail("distractor_ratio must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.same_identity_photo_rate) {
            return fail("same_identity_photo_rate must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn with_distractor_ratio(&self, ratio: f64) -> Self {
        Self {
            distractor_ratio: ratio,
            ..self.clone()
        }
    }
}

struct Face {
    label: Option<usize>,
    photo: usize,
    vector: Vec<f32>,
}

/// Generates a labeled corpus. Identity faces carry labels `id<k>`;
/// distractors carry [`NOISE_LABEL`].
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<EmbeddingSet> {
    spec.validate()?;
    let d = spec.embedding_dim;
    let center_sd = spec.inter_separation / (2.0 * d as f64).sqrt();
    let face_sd = spec.intra_spread / (d as f64).sqrt();
    let background_sd = center_sd * spec.background_scale;
    let mut rng = substream(spec.seed, "synthetic");
    let gauss = |sd: f64| Normal::new(0.0, sd).expect("positive standard deviation");
    let (center_dist, face_dist, bg_dist) =
        (gauss(center_sd), gauss(face_sd), gauss(background_sd));

    let n_accounts = spec.n_identities.div_ceil(spec.identities_per_account);
    let mut accounts: Vec<Vec<Face>> = (0..n_accounts).map(|_| Vec::new()).collect();
    let mut identity_faces = 0usize;
    for k in 0..spec.n_identities {
        let faces = &mut accounts[k / spec.identities_per_account];
        let center: Vec<f64> = (0..d).map(|_| center_dist.sample(&mut rng)).collect();
        let count = rng.random_range(spec.faces_per_identity.0..=spec.faces_per_identity.1);
        let first_photo = faces.len();
        for j in 0..count {
            let photo = if j > 0 && rng.random_bool(spec.same_identity_photo_rate) {
                first_photo + rng.random_range(0..j)
            } else {
                first_photo + j
            };
            let vector = center
                .iter()
                .map(|c| (c + face_dist.sample(&mut rng)) as f32)
                .collect();
            faces.push(Face {
                label: Some(k),
                photo,
                vector,
            });
        }
        identity_faces += count;
    }

    let n_distractors = (spec.distractor_ratio * identity_faces as f64).round() as usize;
    for i in 0..n_distractors {
        let faces = &mut accounts[i % n_accounts];
        let photo = faces.len() + n_distractors;
        let vector = (0..d).map(|_| bg_dist.sample(&mut rng) as f32).collect();
        faces.push(Face {
            label: None,
            photo,
            vector,
        });
    }

    let mut records = Vec::new();
    let mut data = Vec::new();
    for (a, faces) in accounts.iter_mut().enumerate() {
        for _ in 0..spec.multi_identity_photos {
            if faces.len() < 2 {
                break;
            }
            let pair = rand::seq::index::sample(&mut rng, faces.len(), 2).into_vec();
            if let [x, y] = pair[..] {
                let (lx, ly) = (faces[x].label, faces[y].label);
                if lx.is_some() && ly.is_some() && lx != ly {
                    faces[y].photo = faces[x].photo;
                }
            }
        }
        faces.shuffle(&mut rng);
        for (j, f) in faces.iter().enumerate() {
            let label = f
                .label
                .map_or_else(|| NOISE_LABEL.to_owned(), |k| format!("id{k:06}"));
            records.push(
                FaceRecord::new(
                    format!("acct{a:05}_f{j:05}"),
                    format!("acct{a:05}"),
                    format!("acct{a:05}_p{:05}", f.photo),
                )
                .with_label(label),
            );
            data.extend_from_slice(&f.vector);
        }
    }
    EmbeddingSet::new(records, d, data)
}
