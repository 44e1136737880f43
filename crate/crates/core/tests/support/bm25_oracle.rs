//! Brute-force BM25 over raw token lists. No index, no shared code with the
//! crate under test.

#![allow(dead_code)]

pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;

pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Score of every document, in document order.
pub fn scores(docs: &[Vec<String>], query: &[String]) -> Vec<f64> {
    let n = docs.len() as f64;
    let total: usize = docs.iter().map(Vec::len).sum();
    let avg = if docs.is_empty() { 0.0 } else { total as f64 / n };
    let mut uniq: Vec<&String> = Vec::new();
    for q in query {
        if !uniq.contains(&q) {
            uniq.push(q);
        }
    }
    docs.iter()
        .map(|doc| {
            let len = doc.len() as f64;
            let mut s = 0.0;
            for q in &uniq {
                let tf = doc.iter().filter(|w| w == q).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = docs.iter().filter(|d| d.contains(q)).count() as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                s += idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * len / avg));
            }
            s
        })
        .collect()
}

/// `(ordinal, score)` pairs with positive score, best first, ties by ordinal,
/// cut to `k`.
pub fn ranking(docs: &[Vec<String>], query: &[String], k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = scores(docs, query)
        .into_iter()
        .enumerate()
        .filter(|&(_, s)| s > 0.0)
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Compares a ranking under test with the oracle's. Positions may hold
/// different documents only when the oracle scores those two documents
/// within `tol` of each other.
pub fn compare(
    got: &[(usize, f64)],
    docs: &[Vec<String>],
    query: &[String],
    k: usize,
    tol: f64,
) -> Result<(), String> {
    let want = ranking(docs, query, k);
    let all = scores(docs, query);
    if got.len() != want.len() {
        return Err(format!("expected {} hits, got {}", want.len(), got.len()));
    }
    for (i, (g, w)) in got.iter().zip(&want).enumerate() {
        if (g.1 - w.1).abs() > tol {
            return Err(format!("rank {}: score {} vs oracle {}", i + 1, g.1, w.1));
        }
        if g.0 != w.0 && (all[g.0] - all[w.0]).abs() > tol {
            return Err(format!("rank {}: doc {} vs oracle doc {}", i + 1, g.0, w.0));
        }
    }
    Ok(())
}
