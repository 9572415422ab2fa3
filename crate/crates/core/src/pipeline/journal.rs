//! Append-only record of completed account jobs.
//!
//! Each line is a JSON object holding the account id, a SHA-256 hash of the
//! job's inputs and the job's result. On resume, entries whose hash still
//! matches are reused; a torn final line is ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::AccountClustering;
use crate::config::CurationConfig;
use crate::error::{Error, Result};
use crate::model::EmbeddingSet;

#[derive(Serialize, Deserialize)]
struct Entry {
    account_id: String,
    input_hash: String,
    result: AccountClustering,
}

/// Hash of everything an account job reads.
pub fn job_hash(set: &EmbeddingSet, rows: &[usize], config: &CurationConfig) -> String {
    let mut h = Sha256::new();
    h.update(config.beta.to_le_bytes());
    h.update((config.min_cluster_size as u64).to_le_bytes());
    for &i in rows {
        let r = set.record(i);
        for field in [&r.face_id, &r.account_id, &r.photo_id] {
            h.update((field.len() as u64).to_le_bytes());
            h.update(field.as_bytes());
        }
        for v in set.row(i) {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Journaled results keyed by account id, with the input hash they were computed from.
pub type JournalEntries = HashMap<String, (String, AccountClustering)>;

pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Opens the journal, truncating it unless `resume` is set. Returns the
    /// reusable entries keyed by account id with their input hash.
    pub fn open(path: &Path, resume: bool) -> Result<(Self, JournalEntries)> {
        let mut done = HashMap::new();
        if resume && path.exists() {
            let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
            for line in reader.lines() {
                let line = line.map_err(|e| Error::io(path, e))?;
                match serde_json::from_str::<Entry>(&line) {
                    Ok(e) => {
                        done.insert(e.account_id, (e.input_hash, e.result));
                    }
                    Err(err) => log::warn!(
                        "{}: skipping unreadable journal line: {err}",
                        path.display()
                    ),
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(resume)
            .write(true)
            .truncate(!resume)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok((
            Self {
                path: path.to_owned(),
                file,
            },
            done,
        ))
    }

    /// Appends and flushes one entry.
    pub fn record(
        &mut self,
        account_id: &str,
        input_hash: &str,
        result: &AccountClustering,
    ) -> Result<()> {
        let entry = Entry {
            account_id: account_id.to_owned(),
            input_hash: input_hash.to_owned(),
            result: result.clone(),
        };
        let mut line = serde_json::to_string(&entry).expect("journal entry serializes");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}
