//! Sparse lexical retrieval over training prompts: tokenizer, inverted
//! index, BM25 scoring and deterministic top-k ranking.

mod persist;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use persist::{read_index, write_index, INDEX_MAGIC};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),
    #[error("document ordinal {ordinal} out of range (doc count {doc_count})")]
    OrdinalOutOfRange { ordinal: usize, doc_count: usize },
    #[error("malformed index file: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

/// Lower-cases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// BM25 saturation and length-normalization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: usize,
    pub tf: u32,
}

/// Immutable inverted index. Document ordinals follow insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    doc_ids: Vec<String>,
    avg_doc_length: f64,
}

/// One scored document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub id: String,
    pub ordinal: usize,
    pub score: f64,
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`; never negative.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Single-term BM25 contribution.
pub fn term_weight(params: Bm25Params, idf: f64, tf: f64, doc_len: f64, avg_len: f64) -> f64 {
    let norm = if avg_len > 0.0 { doc_len / avg_len } else { 0.0 };
    idf * (tf * (params.k1 + 1.0)) / (tf + params.k1 * (1.0 - params.b + params.b * norm))
}

/// Query terms with duplicates removed, first occurrence kept.
pub fn unique_terms(terms: &[String]) -> Vec<&str> {
    let mut seen = HashSet::new();
    terms
        .iter()
        .map(String::as_str)
        .filter(|t| seen.insert(*t))
        .collect()
}

impl Index {
    /// Builds an index over `(id, text)` documents.
    pub fn build<I, S, T>(corpus: I) -> Result<Self, RetrievalError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::new();
        let mut doc_ids: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        for (ordinal, (id, text)) in corpus.into_iter().enumerate() {
            let id = id.into();
            if !seen.insert(id.clone()) {
                return Err(RetrievalError::DuplicateDocId(id));
            }
            let tokens = tokenize(text.as_ref());
            let mut counts: HashMap<String, u32> = HashMap::new();
            for tok in &tokens {
                *counts.entry(tok.clone()).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting { doc: ordinal, tf });
            }
            doc_lengths.push(tokens.len() as u32);
            doc_ids.push(id);
        }
        Ok(Self::from_parts(postings, doc_lengths, doc_ids))
    }

    fn from_parts(
        postings: BTreeMap<String, Vec<Posting>>,
        doc_lengths: Vec<u32>,
        doc_ids: Vec<String>,
    ) -> Self {
        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / doc_lengths.len() as f64
        };
        Self {
            postings,
            doc_lengths,
            doc_ids,
            avg_doc_length,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    fn tf(&self, term: &str, doc: usize) -> u32 {
        let list = self.postings(term);
        list.binary_search_by_key(&doc, |p| p.doc)
            .map(|i| list[i].tf)
            .unwrap_or(0)
    }

    /// BM25 score of one document against already-tokenized query terms.
    pub fn bm25_score(
        &self,
        query_terms: &[String],
        ordinal: usize,
        params: Bm25Params,
    ) -> Result<f64, RetrievalError> {
        if ordinal >= self.doc_count() {
            return Err(RetrievalError::OrdinalOutOfRange {
                ordinal,
                doc_count: self.doc_count(),
            });
        }
        let doc_len = self.doc_lengths[ordinal] as f64;
        let mut score = 0.0;
        for term in unique_terms(query_terms) {
            let tf = self.tf(term, ordinal);
            if tf == 0 {
                continue;
            }
            let w = idf(self.doc_count(), self.postings(term).len());
            score += term_weight(params, w, tf as f64, doc_len, self.avg_doc_length);
        }
        Ok(score)
    }

    /// Up to `k` documents with positive score, best first; equal scores are
    /// ordered by ascending ordinal.
    pub fn top_k(&self, query: &str, k: usize, params: Bm25Params) -> Vec<Scored> {
        if k == 0 || self.doc_count() == 0 {
            return Vec::new();
        }
        let terms = tokenize(query);
        let mut scores: BTreeMap<usize, f64> = BTreeMap::new();
        // Per document, contributions are added in query-term order.
        for term in unique_terms(&terms) {
            let list = self.postings(term);
            if list.is_empty() {
                continue;
            }
            let w = idf(self.doc_count(), list.len());
            for p in list {
                let doc_len = self.doc_lengths[p.doc] as f64;
                *scores.entry(p.doc).or_insert(0.0) +=
                    term_weight(params, w, p.tf as f64, doc_len, self.avg_doc_length);
            }
        }
        let mut ranked: Vec<(usize, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
            .into_iter()
            .map(|(ordinal, score)| Scored {
                id: self.doc_ids[ordinal].clone(),
                ordinal,
                score,
            })
            .collect()
    }

    /// Checks the structural invariants.
    pub fn check(&self) -> Result<(), RetrievalError> {
        let mut per_doc = vec![0u64; self.doc_count()];
        for (term, list) in &self.postings {
            if list.is_empty() {
                return Err(RetrievalError::Format(format!("empty postings for `{term}`")));
            }
            for w in list.windows(2) {
                if w[0].doc >= w[1].doc {
                    return Err(RetrievalError::Format(format!(
                        "postings for `{term}` not strictly ascending"
                    )));
                }
            }
            for p in list {
                if p.doc >= self.doc_count() || p.tf == 0 {
                    return Err(RetrievalError::Format(format!("bad posting for `{term}`")));
                }
                per_doc[p.doc] += p.tf as u64;
            }
        }
        for (doc, (&len, &sum)) in self.doc_lengths.iter().zip(&per_doc).enumerate() {
            if len as u64 != sum {
                return Err(RetrievalError::Format(format!(
                    "doc {doc} length {len} != posting total {sum}"
                )));
            }
        }
        Ok(())
    }
}
