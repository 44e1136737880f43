//! Corpus file format.
//!
//! One JSON object per line, one line per record, in stored order, followed
//! by a manifest line:
//!
//! ```text
//! {"instance":{...},"assets":{...}|null,"created_at":"...Z","asset_model_id":...}
//! ...
//! {"schema_version":1,"count":N,"content_checksum":"<hex>","integrity":"<hex>"}
//! ```
//!
//! `content_checksum` hashes the records without their timestamps, so two
//! corpora built from the same data agree on it. `integrity` hashes every
//! byte of the file before the `,"integrity":"` marker and is checked before
//! anything is parsed, which makes any single-byte change detectable.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::digest::{sha256_hex, sha256_parts};
use crate::model::{ModelError, ReasoningAssets, TrainingInstance};

pub const SCHEMA_VERSION: u32 = 1;
const INTEGRITY_MARKER: &str = ",\"integrity\":\"";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub instance: TrainingInstance,
    pub assets: Option<ReasoningAssets>,
    /// UTC, second precision, `YYYY-MM-DDTHH:MM:SSZ`.
    pub created_at: String,
    pub asset_model_id: Option<String>,
}

/// Current UTC time at second precision.
pub fn timestamp_now() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

impl CorpusRecord {
    pub fn new(instance: TrainingInstance) -> Self {
        Self {
            instance,
            assets: None,
            created_at: timestamp_now(),
            asset_model_id: None,
        }
    }

    pub fn id(&self) -> &str {
        self.instance.id()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.instance.validate()?;
        if let Some(assets) = &self.assets {
            assets.validate()?;
            if assets.source_id != self.id() {
                return Err(ModelError::Invariant(format!(
                    "assets for `{}` attached to `{}`",
                    assets.source_id,
                    self.id()
                )));
            }
        }
        chrono::NaiveDateTime::parse_from_str(&self.created_at, "%Y-%m-%dT%H:%M:%SZ")
            .map_err(|_| ModelError::Invariant(format!("bad timestamp `{}`", self.created_at)))?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ChecksumView<'a> {
    instance: &'a TrainingInstance,
    assets: &'a Option<ReasoningAssets>,
    asset_model_id: &'a Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    count: usize,
    content_checksum: String,
}

/// Timestamp-independent checksum of a record list.
pub fn content_checksum(records: &[CorpusRecord]) -> String {
    let mut buf = Vec::new();
    for r in records {
        let view = ChecksumView {
            instance: &r.instance,
            assets: &r.assets,
            asset_model_id: &r.asset_model_id,
        };
        serde_json::to_writer(&mut buf, &view).expect("record serializes");
        buf.push(b'\n');
    }
    sha256_hex(&buf)
}

pub fn encode_corpus(records: &[CorpusRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("record serializes");
        buf.push(b'\n');
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        count: records.len(),
        content_checksum: content_checksum(records),
    };
    let mut line = serde_json::to_string(&manifest).expect("manifest serializes");
    line.pop(); // closing brace
    buf.extend_from_slice(line.as_bytes());
    buf.extend_from_slice(INTEGRITY_MARKER.as_bytes());
    let integrity = sha256_hex(&buf);
    buf.extend_from_slice(integrity.as_bytes());
    buf.extend_from_slice(b"\"}\n");
    buf
}

fn format_error(location: impl Into<String>, cause: impl Into<String>) -> StoreError {
    StoreError::FormatError {
        location: location.into(),
        cause: cause.into(),
    }
}

pub fn decode_corpus(bytes: &[u8]) -> Result<Vec<CorpusRecord>, StoreError> {
    let body = bytes
        .strip_suffix(b"\n")
        .ok_or(StoreError::ChecksumMismatch)?;
    let line_start = body.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let manifest_line = &body[line_start..];
    let marker_at = find_last(manifest_line, INTEGRITY_MARKER.as_bytes())
        .ok_or(StoreError::ChecksumMismatch)?;
    let stored = manifest_line[marker_at + INTEGRITY_MARKER.len()..]
        .strip_suffix(b"\"}")
        .ok_or(StoreError::ChecksumMismatch)?;
    let covered = &bytes[..line_start + marker_at + INTEGRITY_MARKER.len()];
    if sha256_hex(covered).as_bytes() != stored {
        return Err(StoreError::ChecksumMismatch);
    }

    let mut manifest_json = manifest_line[..marker_at].to_vec();
    manifest_json.push(b'}');
    let manifest: Manifest = serde_json::from_slice(&manifest_json)
        .map_err(|e| format_error("manifest", e.to_string()))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(StoreError::SchemaVersionUnsupported {
            found: manifest.schema_version,
            supported: SCHEMA_VERSION,
        });
    }

    let mut records = Vec::with_capacity(manifest.count);
    let record_region = &bytes[..line_start];
    for (i, line) in record_region
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .enumerate()
    {
        let record: CorpusRecord = serde_json::from_slice(line)
            .map_err(|e| format_error(format!("line {}", i + 1), e.to_string()))?;
        record.validate().map_err(|source| StoreError::Invalid {
            id: record.id().to_string(),
            source,
        })?;
        records.push(record);
    }
    if records.len() != manifest.count {
        return Err(format_error(
            "manifest",
            format!("count {} but {} records", manifest.count, records.len()),
        ));
    }
    if content_checksum(&records) != manifest.content_checksum {
        return Err(StoreError::ChecksumMismatch);
    }
    check_unique(&records)?;
    Ok(records)
}

fn find_last(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).rposition(|w| w == needle)
}

fn check_unique(records: &[CorpusRecord]) -> Result<HashMap<String, usize>, StoreError> {
    let mut by_id = HashMap::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if by_id.insert(r.id().to_string(), i).is_some() {
            return Err(StoreError::DuplicateId(r.id().to_string()));
        }
    }
    Ok(by_id)
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{file_name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn save_corpus(path: &Path, records: &[CorpusRecord]) -> Result<(), StoreError> {
    atomic_write(path, &encode_corpus(records))?;
    Ok(())
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>, StoreError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => StoreError::FileNotFound(path.display().to_string()),
        _ => StoreError::Io(e),
    })?;
    decode_corpus(&bytes)
}

/// Exclusive writer lock, held as a `<corpus>.lock` file.
#[derive(Debug)]
pub struct WriterLock {
    path: PathBuf,
}

impl WriterLock {
    pub fn acquire(corpus_path: &Path) -> Result<Self, StoreError> {
        let mut name = corpus_path.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(StoreError::Locked(path.display().to_string()))
            }
            Err(e) => Err(StoreError::Io(e)),
        }
    }
}

impl Drop for WriterLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// In-memory corpus, optionally bound to a file it persists to.
#[derive(Debug)]
pub struct Corpus {
    records: Vec<CorpusRecord>,
    by_id: HashMap<String, usize>,
    path: Option<PathBuf>,
    _lock: Option<WriterLock>,
}

impl Corpus {
    pub fn from_records(records: Vec<CorpusRecord>) -> Result<Self, StoreError> {
        for r in &records {
            r.validate().map_err(|source| StoreError::Invalid {
                id: r.id().to_string(),
                source,
            })?;
        }
        let by_id = check_unique(&records)?;
        Ok(Self {
            records,
            by_id,
            path: None,
            _lock: None,
        })
    }

    /// Loads a corpus for reading only.
    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let mut corpus = Self::from_records(load_corpus(path)?)?;
        corpus.path = Some(path.to_path_buf());
        Ok(corpus)
    }

    /// Loads a corpus and takes the writer lock.
    pub fn open_for_write(path: &Path) -> Result<Self, StoreError> {
        let lock = WriterLock::acquire(path)?;
        let mut corpus = Self::load(path)?;
        corpus._lock = Some(lock);
        Ok(corpus)
    }

    /// Creates (or replaces) the corpus file at `path`.
    pub fn create(path: &Path, records: Vec<CorpusRecord>) -> Result<Self, StoreError> {
        let lock = WriterLock::acquire(path)?;
        let mut corpus = Self::from_records(records)?;
        corpus.path = Some(path.to_path_buf());
        corpus._lock = Some(lock);
        corpus.save()?;
        Ok(corpus)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> &[CorpusRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CorpusRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn checksum(&self) -> String {
        content_checksum(&self.records)
    }

    /// Digest of the indexed text only, so an index stays valid while
    /// assets are added.
    pub fn documents_digest(&self) -> String {
        let mut parts: Vec<&[u8]> = Vec::with_capacity(self.records.len() * 2);
        for (id, text) in self.documents() {
            parts.push(id.as_bytes());
            parts.push(text.as_bytes());
        }
        sha256_parts(&parts)
    }

    /// Fraction of records that carry assets; 0 for an empty corpus.
    pub fn asset_coverage(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let with = self.records.iter().filter(|r| r.assets.is_some()).count();
        with as f64 / self.records.len() as f64
    }

    /// `(id, flattened prompt)` pairs in stored order, for indexing.
    pub fn documents(&self) -> impl Iterator<Item = (&str, &str)> {
        self.records
            .iter()
            .map(|r| (r.id(), r.instance.prompt.text.as_str()))
    }

    /// Attaches assets in memory without persisting.
    pub fn set_assets(
        &mut self,
        id: &str,
        assets: ReasoningAssets,
        model_id: Option<String>,
        overwrite: bool,
    ) -> Result<(), StoreError> {
        let &i = self
            .by_id
            .get(id)
            .ok_or_else(|| StoreError::UnknownId(id.to_string()))?;
        let record = &mut self.records[i];
        if record.assets.is_some() && !overwrite {
            return Err(StoreError::AssetsAlreadyPresent(id.to_string()));
        }
        let invalid = |source| StoreError::Invalid {
            id: id.to_string(),
            source,
        };
        assets.validate().map_err(invalid)?;
        if assets.source_id != id {
            return Err(invalid(ModelError::Invariant(format!(
                "assets name source `{}`",
                assets.source_id
            ))));
        }
        record.assets = Some(assets);
        record.asset_model_id = model_id;
        Ok(())
    }

    /// Attaches assets and persists the corpus.
    pub fn append_assets(
        &mut self,
        id: &str,
        assets: ReasoningAssets,
        model_id: Option<String>,
        overwrite: bool,
    ) -> Result<(), StoreError> {
        self.set_assets(id, assets, model_id, overwrite)?;
        self.save()
    }

    /// Persists to the bound path; a no-op for unbound corpora.
    pub fn save(&self) -> Result<(), StoreError> {
        match &self.path {
            Some(path) => save_corpus(path, &self.records),
            None => Ok(()),
        }
    }
}
