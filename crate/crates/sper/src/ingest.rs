//! CSV loaders for record collections, ground truth and precomputed vectors.
//!
//! All files are comma-separated UTF-8 with a header row and double-quote
//! escaping. Row numbers in errors are 1-based file lines (the header is
//! line 1).

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use log::warn;
use sper_core::{EmbeddingVector, EntityId, EntityRecord, TruthSet};

use crate::error::{Error, Result};

/// The two collections to link plus the optional ground truth.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records_r: Vec<EntityRecord>,
    pub records_s: Vec<EntityRecord>,
    pub truth: Option<TruthSet>,
    /// Truth rows dropped because they referenced unknown ids.
    pub dropped_truth: usize,
    /// Self-join: `records_s` is the same collection as `records_r`.
    pub dedup: bool,
}

impl Dataset {
    /// Record linkage between two collections.
    pub fn linkage(records_r: Vec<EntityRecord>, records_s: Vec<EntityRecord>) -> Self {
        Self {
            records_r,
            records_s,
            ..Self::default()
        }
    }

    /// Deduplication of a single collection.
    pub fn dedup(records: Vec<EntityRecord>) -> Self {
        Self {
            records_s: records.clone(),
            records_r: records,
            dedup: true,
            ..Self::default()
        }
    }

    /// Attaches ground truth, dropping (and counting) pairs with unknown ids.
    pub fn with_truth(mut self, rows: Vec<(String, String)>) -> Self {
        let r_ids: HashSet<&str> = self.records_r.iter().map(|r| r.id.as_str()).collect();
        let s_ids: HashSet<&str> = self.records_s.iter().map(|r| r.id.as_str()).collect();
        let mut truth = TruthSet::new(self.dedup);
        let mut dropped = 0;
        for (r, s) in rows {
            let known = r_ids.contains(r.as_str()) && s_ids.contains(s.as_str());
            if !known || (self.dedup && r == s) {
                dropped += 1;
                continue;
            }
            truth.insert(EntityId::from(r), EntityId::from(s));
        }
        if dropped > 0 {
            warn!("dropped {dropped} ground-truth pairs referencing unknown ids");
        }
        self.truth = Some(truth);
        self.dropped_truth = dropped;
        self
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, csv::Position::line)
}

/// One record per data row; the text is the non-empty non-id fields joined
/// by single spaces in column order.
pub fn load_collection(path: impl AsRef<Path>, id_column: &str) -> Result<Vec<EntityRecord>> {
    let path = path.as_ref();
    read_collection(open(path)?, path, id_column)
}

pub fn read_collection<R: Read>(input: R, path: &Path, id_column: &str) -> Result<Vec<EntityRecord>> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let id_idx = headers
        .iter()
        .position(|h| h == id_column)
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_owned(),
            column: id_column.to_owned(),
        })?;

    let mut seen: HashMap<String, u64> = HashMap::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&row);
        let id = &row[id_idx];
        if id.is_empty() {
            return Err(Error::BadRow {
                path: path.to_owned(),
                row: line,
                message: "empty id".into(),
            });
        }
        if let Some(&first_row) = seen.get(id) {
            return Err(Error::DuplicateId {
                path: path.to_owned(),
                id: id.to_owned(),
                first_row,
                second_row: line,
            });
        }
        seen.insert(id.to_owned(), line);
        let text = row
            .iter()
            .enumerate()
            .filter(|&(i, v)| i != id_idx && !v.is_empty())
            .map(|(_, v)| v)
            .collect::<Vec<_>>()
            .join(" ");
        records.push(EntityRecord::new(id, text));
    }
    Ok(records)
}

/// Ground-truth rows `(r_id, s_id)`, deduplicated, in file order. Unknown
/// ids are filtered later by [`Dataset::with_truth`].
pub fn load_truth(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    read_truth(open(path)?, path)
}

pub fn read_truth<R: Read>(input: R, path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?;
    if headers.len() != 2 {
        return Err(Error::BadRow {
            path: path.to_owned(),
            row: 1,
            message: format!("expected header r_id,s_id, found {} columns", headers.len()),
        });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        if row[0].is_empty() || row[1].is_empty() {
            return Err(Error::BadRow {
                path: path.to_owned(),
                row: line_of(&row),
                message: "empty id in truth pair".into(),
            });
        }
        let pair = (row[0].to_owned(), row[1].to_owned());
        if seen.insert(pair.clone()) {
            out.push(pair);
        }
    }
    Ok(out)
}

/// Reads `id,v0,...,v{d-1}` rows and L2-normalizes each vector (zero
/// vectors stay zero). With `known_ids`, every id must belong to it.
pub fn load_precomputed_embeddings(
    path: impl AsRef<Path>,
    dimension: usize,
    known_ids: Option<&HashSet<&str>>,
) -> Result<HashMap<EntityId, EmbeddingVector>> {
    let path = path.as_ref();
    read_embeddings(open(path)?, path, dimension, known_ids)
}

pub fn read_embeddings<R: Read>(
    input: R,
    path: &Path,
    dimension: usize,
    known_ids: Option<&HashSet<&str>>,
) -> Result<HashMap<EntityId, EmbeddingVector>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header_len = rdr.headers().map_err(|e| Error::csv(path, e))?.len();
    if header_len != dimension + 1 {
        return Err(sper_core::Error::DimensionMismatch {
            expected: dimension,
            found: header_len.saturating_sub(1),
        }
        .into());
    }
    let mut out = HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&row);
        let bad = |message: String| Error::BadRow {
            path: path.to_owned(),
            row: line,
            message,
        };
        if row.len() != dimension + 1 {
            return Err(bad(format!(
                "dimension mismatch: expected {dimension} values, found {}",
                row.len().saturating_sub(1)
            )));
        }
        let id = &row[0];
        if known_ids.is_some_and(|ids| !ids.contains(id)) {
            return Err(bad(format!("id {id:?} is not in the dataset")));
        }
        let mut values = Vec::with_capacity(dimension);
        for field in row.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| bad(format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value {field:?}")));
            }
            values.push(v);
        }
        if out.insert(EntityId::new(id), EmbeddingVector::normalized(values)).is_some() {
            return Err(bad(format!("duplicate id {id:?}")));
        }
    }
    Ok(out)
}
