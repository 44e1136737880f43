//! Text serialization of an [`Index`].
//!
//! ```text
//! assetopt-bm25-index 1
//! corpus <content checksum or ->
//! docs <N>
//! <length>\t<JSON-quoted id>          (N lines, ordinal order)
//! terms <T>
//! <term>\t<doc>:<tf> <doc>:<tf> ...   (T lines, terms in byte order)
//! ```
//!
//! Every line ends with `\n`. The average document length is derived on load,
//! so no floating-point value is stored and output is a pure function of the
//! input documents and their order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Index, Posting, RetrievalError};

pub const INDEX_MAGIC: &str = "assetopt-bm25-index";
const INDEX_VERSION: u32 = 1;

pub fn write_index(index: &Index, corpus_checksum: Option<&str>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{INDEX_MAGIC} {INDEX_VERSION}");
    let _ = writeln!(out, "corpus {}", corpus_checksum.unwrap_or("-"));
    let _ = writeln!(out, "docs {}", index.doc_count());
    for (len, id) in index.doc_lengths.iter().zip(&index.doc_ids) {
        let quoted = serde_json::to_string(id).expect("string serializes");
        let _ = writeln!(out, "{len}\t{quoted}");
    }
    let _ = writeln!(out, "terms {}", index.postings.len());
    for (term, list) in &index.postings {
        out.push_str(term);
        out.push('\t');
        let cells: Vec<String> = list.iter().map(|p| format!("{}:{}", p.doc, p.tf)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

fn bad(msg: impl Into<String>) -> RetrievalError {
    RetrievalError::Format(msg.into())
}

fn count_line<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    key: &str,
) -> Result<usize, RetrievalError> {
    let line = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad(format!("bad `{key}` line: {line}")))
}

/// Parses an index file, returning the index and the recorded corpus
/// checksum (if one was written).
pub fn read_index(text: &str) -> Result<(Index, Option<String>), RetrievalError> {
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| bad("missing trailing newline"))?;
    let mut lines = body.split('\n');
    let header = lines.next().unwrap_or_default();
    let version = header
        .strip_prefix(INDEX_MAGIC)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| bad("not an index file"))?;
    if version != INDEX_VERSION.to_string() {
        return Err(bad(format!("unsupported index version {version}")));
    }
    let corpus = lines
        .next()
        .and_then(|l| l.strip_prefix("corpus "))
        .ok_or_else(|| bad("missing corpus line"))?;
    let corpus = (corpus != "-").then(|| corpus.to_string());

    let n = count_line(&mut lines, "docs")?;
    let mut doc_lengths = Vec::with_capacity(n);
    let mut doc_ids = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| bad("truncated doc table"))?;
        let (len, id) = line.split_once('\t').ok_or_else(|| bad("bad doc line"))?;
        doc_lengths.push(len.parse().map_err(|_| bad("bad doc length"))?);
        doc_ids.push(serde_json::from_str::<String>(id).map_err(|e| bad(e.to_string()))?);
    }

    let t = count_line(&mut lines, "terms")?;
    let mut postings = BTreeMap::new();
    for _ in 0..t {
        let line = lines.next().ok_or_else(|| bad("truncated term table"))?;
        let (term, cells) = line.split_once('\t').ok_or_else(|| bad("bad term line"))?;
        let list = cells
            .split(' ')
            .map(|cell| {
                let (doc, tf) = cell.split_once(':').ok_or_else(|| bad("bad posting"))?;
                Ok(Posting {
                    doc: doc.parse().map_err(|_| bad("bad posting doc"))?,
                    tf: tf.parse().map_err(|_| bad("bad posting tf"))?,
                })
            })
            .collect::<Result<Vec<_>, RetrievalError>>()?;
        if postings.insert(term.to_string(), list).is_some() {
            return Err(bad(format!("duplicate term `{term}`")));
        }
    }
    if lines.next().is_some() {
        return Err(bad("trailing data"));
    }
    let index = Index::from_parts(postings, doc_lengths, doc_ids);
    index.check()?;
    Ok((index, corpus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_is_stable() {
        let docs = [("a", "the cat sat"), ("b\t\"x\"", "the dog, the end")];
        let idx = Index::build(docs).unwrap();
        let text = write_index(&idx, Some("abc"));
        let (back, checksum) = read_index(&text).unwrap();
        assert_eq!(back, idx);
        assert_eq!(checksum.as_deref(), Some("abc"));
        let again = write_index(&Index::build(docs).unwrap(), Some("abc"));
        assert_eq!(text, again);
    }

    #[test]
    fn empty_index_round_trips() {
        let idx = Index::build(Vec::<(String, String)>::new()).unwrap();
        let (back, sum) = read_index(&write_index(&idx, None)).unwrap();
        assert_eq!(back.doc_count(), 0);
        assert!(sum.is_none());
    }

    #[test]
    fn rejects_inconsistent_lengths() {
        let idx = Index::build([("a", "x x")]).unwrap();
        let text = write_index(&idx, None).replace("2\t\"a\"", "3\t\"a\"");
        assert!(read_index(&text).is_err());
    }

    #[test]
    fn rejects_other_versions() {
        let text = format!("{INDEX_MAGIC} 9\ncorpus -\ndocs 0\nterms 0\n");
        assert!(read_index(&text).is_err());
    }
}
