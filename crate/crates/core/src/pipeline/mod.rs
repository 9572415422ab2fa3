//! End-to-end curation over many accounts.
//!
//! Accounts below the photo floor are skipped. Each remaining account is
//! one clustering job; jobs run on a [`JobTransport`] and results are
//! applied in ascending account-id order regardless of arrival order.
//! Purification then runs over the assembled population (globally or per
//! account) and every face is accounted for in an [`AuditReport`].

mod distractors;
mod journal;
mod report;
mod transport;

pub use distractors::extract_disjoint_distractors;
pub use journal::{job_hash, Journal};
pub use report::{
    compute_stats, AuditReport, ClusterRecord, DatasetStats, DiscardBreakdown, PurificationRecord,
};
pub use transport::{JobTransport, LocalQueue};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{cluster_account, AccountClustering};
use crate::config::CurationConfig;
use crate::error::{Error, Result};
use crate::model::{ClusterStatus, EmbeddingSet, IdentityCluster};
use crate::purify::{purify_scoped, PurificationOutcome};

/// Accounts that meet the photo floor, plus the skipped ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccountFilter<'a> {
    pub kept: Vec<(&'a str, Vec<usize>)>,
    pub skipped: Vec<(&'a str, Vec<usize>)>,
}

impl AccountFilter<'_> {
    pub fn skipped_faces(&self) -> usize {
        self.skipped.iter().map(|(_, r)| r.len()).sum()
    }
}

/// Keeps accounts with at least `min_photos` faces.
pub fn filter_accounts<'a>(
    accounts: impl IntoIterator<Item = (&'a str, Vec<usize>)>,
    min_photos: usize,
) -> AccountFilter<'a> {
    let (kept, skipped) = accounts
        .into_iter()
        .partition(|(_, rows)| rows.len() >= min_photos);
    AccountFilter { kept, skipped }
}

/// Clusters, purification outcomes and audit of one curation run.
#[derive(Clone, Debug, PartialEq)]
pub struct Curation {
    /// All clusters that survived the size rule, accepted or rejected, in
    /// canonical order.
    pub clusters: Vec<IdentityCluster>,
    /// Empty when purification was disabled.
    pub outcomes: Vec<PurificationOutcome>,
    pub audit: AuditReport,
}

impl Curation {
    pub fn accepted(&self) -> impl Iterator<Item = &IdentityCluster> {
        self.clusters.iter().filter(|c| c.is_accepted())
    }

    pub fn stats(&self) -> DatasetStats {
        compute_stats(&self.clusters)
    }
}

/// Combines per-account results (in canonical account order) into a run.
pub fn assemble(
    set: &EmbeddingSet,
    config: &CurationConfig,
    filter: &AccountFilter<'_>,
    results: Vec<AccountClustering>,
    purify: bool,
) -> Result<Curation> {
    let mut audit = AuditReport {
        total_faces_in: set.len(),
        accounts_skipped_small: filter.skipped.len(),
        faces_in_skipped_accounts: filter.skipped_faces(),
        ..Default::default()
    };
    let mut clusters = Vec::new();
    for r in results {
        audit.dropped_below_min_size += r.dropped_below_min_size;
        audit.transitive_constraint_violations += r.transitive_violations;
        clusters.extend(r.clusters);
    }
    let outcomes = if purify {
        purify_scoped(&mut clusters, set, config)?
    } else {
        Vec::new()
    };
    for c in &clusters {
        audit.ejected_as_impurities += c.ejected.len();
        match c.status {
            ClusterStatus::Accepted => audit.faces_kept += c.members.len(),
            ClusterStatus::RejectedImpure | ClusterStatus::RejectedSmall => {
                audit.dropped_in_rejected_clusters += c.members.len()
            }
        }
    }
    debug_assert!(audit.is_balanced(), "{audit:?}");
    Ok(Curation {
        clusters,
        outcomes,
        audit,
    })
}

/// In-memory curation of a whole corpus, parallel over accounts.
pub fn curate(set: &EmbeddingSet, config: &CurationConfig, purify: bool) -> Result<Curation> {
    config.validate()?;
    let filter = filter_accounts(set.accounts(), config.min_account_photos);
    let results = filter
        .kept
        .par_iter()
        .map(|(_, rows)| cluster_account(set, rows, config))
        .collect::<Result<Vec<_>>>()?;
    assemble(set, config, &filter, results, purify)
}

/// Everything a pipeline run needs.
#[derive(Clone, Debug)]
pub struct RunManifest {
    /// Corpus directory, `.emb1` file or `.csv` fixture.
    pub input: PathBuf,
    pub config: CurationConfig,
    pub workers: usize,
    pub out_dir: PathBuf,
    /// Reuse journaled account results from an earlier, interrupted run.
    pub resume: bool,
    /// Stop with [`Error::Interrupted`] after this many newly completed
    /// accounts. Simulates a crash.
    pub stop_after: Option<usize>,
}

pub const CLUSTERS_FILE: &str = "clusters.jsonl";
pub const AUDIT_FILE: &str = "audit.json";
pub const STATS_FILE: &str = "stats.json";
pub const PURIFICATION_FILE: &str = "purification.jsonl";
pub const JOURNAL_FILE: &str = "journal.jsonl";

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub curation: Curation,
    pub stats: DatasetStats,
}

pub fn run_pipeline(manifest: &RunManifest) -> Result<PipelineOutput> {
    run_pipeline_with(manifest, &LocalQueue::new(manifest.workers))
}

/// Runs the pipeline, distributing account jobs over `transport`.
pub fn run_pipeline_with<T: JobTransport>(
    manifest: &RunManifest,
    transport: &T,
) -> Result<PipelineOutput> {
    let config = &manifest.config;
    config.validate()?;
    if manifest.workers == 0 {
        return Err(Error::InvalidConfig(
            "worker count must be at least 1".into(),
        ));
    }
    let set = crate::io::load_any(&manifest.input)?;
    let out = &manifest.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let filter = filter_accounts(set.accounts(), config.min_account_photos);
    let hashes: Vec<String> = filter
        .kept
        .par_iter()
        .map(|(_, rows)| job_hash(&set, rows, config))
        .collect();
    let (mut journal, journaled) = Journal::open(&out.join(JOURNAL_FILE), manifest.resume)?;

    let mut results: Vec<Option<AccountClustering>> = vec![None; filter.kept.len()];
    let mut pending = Vec::new();
    for (i, (account, _)) in filter.kept.iter().enumerate() {
        match journaled.get(*account) {
            Some((hash, result)) if *hash == hashes[i] => results[i] = Some(result.clone()),
            _ => pending.push(i),
        }
    }
    log::info!(
        "{} accounts to cluster ({} reused from journal, {} skipped below {} photos)",
        pending.len(),
        filter.kept.len() - pending.len(),
        filter.skipped.len(),
        config.min_account_photos
    );

    let mut completed = 0usize;
    let mut failure: Option<Error> = None;
    let work = |k: usize| {
        let (_, rows) = &filter.kept[pending[k]];
        cluster_account(&set, rows, config)
    };
    transport.dispatch(pending.len(), &work, &mut |k, result| {
        let idx = pending[k];
        let outcome = result.and_then(|r| {
            journal.record(filter.kept[idx].0, &hashes[idx], &r)?;
            results[idx] = Some(r);
            Ok(())
        });
        if let Err(e) = outcome {
            failure = Some(e);
            return false;
        }
        completed += 1;
        manifest.stop_after.is_none_or(|limit| completed < limit)
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if results.iter().any(Option::is_none) {
        return Err(Error::Interrupted(completed));
    }
    let results = results.into_iter().map(Option::unwrap).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let curation = pool.install(|| assemble(&set, config, &filter, results, true))?;
    let stats = curation.stats();
    write_outputs(out, &set, &curation, &stats)?;
    Ok(PipelineOutput { curation, stats })
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| Error::malformed(path, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::malformed(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_outputs(
    out: &Path,
    set: &EmbeddingSet,
    curation: &Curation,
    stats: &DatasetStats,
) -> Result<()> {
    write_jsonl(
        &out.join(CLUSTERS_FILE),
        curation
            .accepted()
            .map(|c| ClusterRecord::from_cluster(c, set)),
    )?;
    let face_ids = |rows: &[usize]| {
        rows.iter()
            .map(|&i| set.record(i).face_id.clone())
            .collect::<Vec<_>>()
    };
    write_jsonl(
        &out.join(PURIFICATION_FILE),
        curation.outcomes.iter().map(|o| PurificationRecord {
            cluster_id: o.cluster_id.clone(),
            initial_size: o.initial_size,
            ejected_face_ids: face_ids(&o.ejected),
            final_status: o.final_status,
            flagged_initially: o.flagged_initially,
            below_min_size: o.below_min_size,
        }),
    )?;
    #[derive(Serialize)]
    struct AuditFile<'a> {
        #[serde(flatten)]
        counts: &'a AuditReport,
        discard_breakdown_percent: Option<DiscardBreakdown>,
    }
    write_json(
        &out.join(AUDIT_FILE),
        &AuditFile {
            counts: &curation.audit,
            discard_breakdown_percent: curation.audit.discard_breakdown(),
        },
    )?;
    write_json(&out.join(STATS_FILE), stats)
}

/// Reads `clusters.jsonl`.
pub fn read_clusters(path: &Path) -> Result<Vec<ClusterRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::malformed(path, format!("line {}: {e}", n + 1)))
        })
        .collect()
}
