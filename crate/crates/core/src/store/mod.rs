//! Persistent corpus of training instances and their reasoning assets.

mod corpus;
mod ingest;
mod results;

use thiserror::Error;

use crate::model::ModelError;

pub use corpus::{
    atomic_write, content_checksum, decode_corpus, encode_corpus, load_corpus, save_corpus,
    timestamp_now, Corpus, CorpusRecord, WriterLock, SCHEMA_VERSION,
};
pub use results::{
    decode_prompts, decode_results, encode_results, read_prompts, read_results, write_results,
};
pub use ingest::{ingest_dataset, parse_dataset, split_turns, DatasetFormat, IngestReport, Reject};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("format error at {location}: {cause}")]
    FormatError { location: String, cause: String },
    #[error("corpus checksum mismatch")]
    ChecksumMismatch,
    #[error("unsupported corpus schema version {found} (supported: {supported})")]
    SchemaVersionUnsupported { found: u32, supported: u32 },
    #[error("unknown record id `{0}`")]
    UnknownId(String),
    #[error("assets already present for `{0}`")]
    AssetsAlreadyPresent(String),
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("invalid record `{id}`: {source}")]
    Invalid { id: String, source: ModelError },
    #[error("corpus is locked by another writer ({0})")]
    Locked(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
