//! Identity curation for large face-embedding corpora.
//!
//! Faces are clustered per account under same-photo no-link constraints
//! with a relative distance threshold, small components are dropped, and
//! the resulting clusters are purified with median-absolute-deviation
//! tests. The crate also tunes the two thresholds on synthetic ground
//! truth and evaluates features under distractor-scaled identification and
//! verification.
//!
//! ```
//! use idcurate_core::{curate, generate_synthetic, CurationConfig, SyntheticSpec};
//!
//! let corpus = generate_synthetic(&SyntheticSpec { n_identities: 10, ..Default::default() })?;
//! let config = CurationConfig { min_account_photos: 0, ..Default::default() };
//! let run = curate(&corpus, &config, true)?;
//! assert!(run.audit.is_balanced());
//! # Ok::<(), idcurate_core::Error>(())
//! ```

pub mod clustering;
pub mod config;
pub mod distance;
mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod purify;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod tuning;

#[cfg(doctest)]
mod book;

pub use clustering::{
    build_constraints, build_face_graph, cluster_account, connected_components, AccountClustering,
    ConstraintMatrix, FaceGraph,
};
pub use config::{CurationConfig, PurificationScope};
pub use distance::{mean_pairwise_distance, pairwise_distance_matrix, DistanceMatrix};
pub use error::{Error, Result};
pub use model::{ClusterStatus, EmbeddingSet, FaceRecord, IdentityCluster, NOISE_LABEL};
pub use pipeline::{
    compute_stats, curate, extract_disjoint_distractors, filter_accounts, run_pipeline,
    AuditReport, Curation, DatasetStats, RunManifest,
};
pub use purify::{
    flag_impure_clusters, purify_cluster, purify_population, PopulationStats, PurificationOutcome,
    PurificationStatus,
};
pub use stats::{mad, median};
pub use synth::{generate_synthetic, SyntheticSpec};
