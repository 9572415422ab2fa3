//! Embedding files.
//!
//! `EMB1` is little-endian: the magic bytes `EMB1`, a `u32` row count, a `u32`
//! dimension, then `rows * dim` `f32` values in row-major order. Face metadata
//! lives in a JSON-lines sidecar with the same stem and a `.jsonl` extension,
//! one [`FaceRecord`] per line in row order.
//!
//! Small fixtures may instead use CSV with the header
//! `face_id,account_id,photo_id,label,f0,...,f{d-1}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{EmbeddingSet, FaceRecord};

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";

/// File name used for the embedding matrix inside a corpus directory.
pub const CORPUS_EMBEDDINGS: &str = "embeddings.emb1";

/// Reads the raw matrix of an `EMB1` file as `(rows, dim, values)`.
pub fn read_emb1(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = [0u8; 12];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::malformed(path, "truncated EMB1 header"))?;
    if &header[..4] != EMB1_MAGIC {
        return Err(Error::malformed(path, "bad magic, expected EMB1"));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    if dim == 0 {
        return Err(Error::malformed(path, "dimension is zero"));
    }
    let mut body = Vec::new();
    reader
        .read_to_end(&mut body)
        .map_err(|e| Error::io(path, e))?;
    let expected = rows
        .checked_mul(dim)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::malformed(path, "header sizes overflow"))?;
    if body.len() != expected {
        return Err(Error::malformed(
            path,
            format!("body has {} bytes, header implies {expected}", body.len()),
        ));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, dim, values))
}

pub fn write_emb1(path: &Path, dim: usize, values: &[f32]) -> Result<()> {
    let rows = values.len() / dim.max(1);
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::malformed(path, format!("{what} exceeds u32")))
    };
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    write(EMB1_MAGIC)?;
    write(&to_u32(rows, "row count")?.to_le_bytes())?;
    write(&to_u32(dim, "dimension")?.to_le_bytes())?;
    for v in values {
        write(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<FaceRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FaceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(path, format!("line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, records: &[FaceRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        let line = serde_json::to_string(r).expect("FaceRecord serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Sidecar manifest path for an `EMB1` file.
pub fn manifest_path(emb_path: &Path) -> PathBuf {
    emb_path.with_extension("jsonl")
}

/// Loads an `EMB1` file and its required sidecar manifest.
pub fn load_emb1(path: &Path) -> Result<EmbeddingSet> {
    let (rows, dim, values) = read_emb1(path)?;
    let mpath = manifest_path(path);
    let records = read_manifest(&mpath)?;
    if records.len() != rows {
        return Err(Error::malformed(
            &mpath,
            format!("{} records for {rows} embedding rows", records.len()),
        ));
    }
    EmbeddingSet::new(records, dim, values).map_err(|e| Error::malformed(path, e.to_string()))
}

/// Loads an `EMB1` file; a missing sidecar yields synthetic records
/// `d{i}` in a per-face account with no label.
pub fn load_emb1_lenient(path: &Path) -> Result<EmbeddingSet> {
    if manifest_path(path).exists() {
        return load_emb1(path);
    }
    let (rows, dim, values) = read_emb1(path)?;
    let records = (0..rows)
        .map(|i| FaceRecord::new(format!("d{i}"), format!("d{i}"), format!("d{i}")))
        .collect();
    EmbeddingSet::new(records, dim, values).map_err(|e| Error::malformed(path, e.to_string()))
}

pub fn save_emb1(path: &Path, set: &EmbeddingSet) -> Result<()> {
    write_emb1(path, set.dim(), set.as_slice())?;
    write_manifest(&manifest_path(path), set.records())
}

pub fn load_csv(path: &Path) -> Result<EmbeddingSet> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| Error::malformed(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .clone();
    let fixed = ["face_id", "account_id", "photo_id", "label"];
    if headers.len() <= fixed.len() || headers.iter().take(4).ne(fixed) {
        return Err(Error::malformed(
            path,
            "header must be face_id,account_id,photo_id,label,f0..",
        ));
    }
    let dim = headers.len() - fixed.len();
    let mut records = Vec::new();
    let mut values = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::malformed(path, e.to_string()))?;
        let label = Some(&row[3]).filter(|l| !l.is_empty()).map(str::to_owned);
        records.push(FaceRecord {
            face_id: row[0].to_owned(),
            account_id: row[1].to_owned(),
            photo_id: row[2].to_owned(),
            label,
        });
        for field in row.iter().skip(fixed.len()) {
            values.push(
                field
                    .trim()
                    .parse::<f32>()
                    .map_err(|e| Error::malformed(path, format!("row {}: {e}", n + 1)))?,
            );
        }
    }
    EmbeddingSet::new(records, dim, values).map_err(|e| Error::malformed(path, e.to_string()))
}

/// Writes the CSV layout read by [`load_csv`].
pub fn save_csv(path: &Path, set: &EmbeddingSet) -> Result<()> {
    let err = |e: csv::Error| Error::malformed(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header: Vec<String> = ["face_id", "account_id", "photo_id", "label"]
        .map(String::from)
        .to_vec();
    header.extend((0..set.dim()).map(|k| format!("f{k}")));
    w.write_record(&header).map_err(err)?;
    for (i, r) in set.records().iter().enumerate() {
        let mut fields = vec![
            r.face_id.clone(),
            r.account_id.clone(),
            r.photo_id.clone(),
            r.label.clone().unwrap_or_default(),
        ];
        fields.extend(set.row(i).iter().map(f32::to_string));
        w.write_record(&fields).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a corpus from a directory (`embeddings.emb1` + sidecar), an `.emb1`
/// file, or a `.csv` fixture.
pub fn load_any(path: &Path) -> Result<EmbeddingSet> {
    if path.is_dir() {
        load_emb1(&path.join(CORPUS_EMBEDDINGS))
    } else if path.extension().is_some_and(|e| e == "csv") {
        load_csv(path)
    } else {
        load_emb1(path)
    }
}

/// Writes a corpus directory readable by [`load_any`].
pub fn save_corpus(dir: &Path, set: &EmbeddingSet) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_emb1(&dir.join(CORPUS_EMBEDDINGS), set)
}
