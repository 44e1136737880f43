//! Per-instance token and call averages across runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::Category;
use crate::manifest::RunManifest;
use crate::model::UsageStats;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("no manifests given")]
    NoManifests,
    #[error("manifests cover different corpora ({0:?}); pass --force to compare anyway")]
    MixedCorpusChecksums(Vec<String>),
    #[error("manifest for `{0}` is not an optimization run")]
    NotAnOptimizationRun(String),
    #[error("strategy {0} has no successfully processed items")]
    NoItems(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowSource {
    Measured,
    /// Static figures for systems this crate does not run.
    Published,
}

/// Which ledger categories count towards a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostView {
    #[default]
    OptimizerOnly,
    WithResponder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub strategy: String,
    pub mean_input_tokens: f64,
    pub mean_output_tokens: f64,
    pub mean_calls: f64,
    pub n: u64,
    pub source: RowSource,
}

impl CostRow {
    fn from_totals(strategy: String, totals: UsageStats, n: u64) -> Self {
        let per = |v: u64| v as f64 / n as f64;
        Self {
            strategy,
            mean_input_tokens: per(totals.input_tokens),
            mean_output_tokens: per(totals.output_tokens),
            mean_calls: per(totals.calls),
            n,
            source: RowSource::Measured,
        }
    }
}

/// Reference rows for MAD and MARS, per instance.
pub fn published_rows() -> Vec<CostRow> {
    [("MAD", 5217.0, 2170.0, 8.0), ("MARS", 17149.0, 6789.0, 60.0)]
        .into_iter()
        .map(|(name, input, output, calls)| CostRow {
            strategy: name.to_string(),
            mean_input_tokens: input,
            mean_output_tokens: output,
            mean_calls: calls,
            n: 0,
            source: RowSource::Published,
        })
        .collect()
}

/// One row per strategy, sorted by strategy name. Runs of the same strategy
/// are pooled.
pub fn cost_table(
    manifests: &[RunManifest],
    view: CostView,
    force: bool,
) -> Result<Vec<CostRow>, CostError> {
    if manifests.is_empty() {
        return Err(CostError::NoManifests);
    }
    let mut checksums: Vec<String> = manifests
        .iter()
        .map(|m| m.corpus_checksum.clone().unwrap_or_else(|| "-".into()))
        .collect();
    checksums.sort();
    checksums.dedup();
    if checksums.len() > 1 && !force {
        return Err(CostError::MixedCorpusChecksums(checksums));
    }
    let mut pooled: BTreeMap<String, (UsageStats, u64)> = BTreeMap::new();
    for m in manifests {
        let strategy = m
            .strategy
            .ok_or_else(|| CostError::NotAnOptimizationRun(m.command.clone()))?;
        let mut usage = m.ledger.accepted(Category::Optimizer);
        if view == CostView::WithResponder {
            usage += m.ledger.accepted(Category::Responder);
        }
        let entry = pooled.entry(strategy.name().to_string()).or_default();
        entry.0 += usage;
        entry.1 += m.items;
    }
    pooled
        .into_iter()
        .map(|(name, (usage, n))| {
            if n == 0 {
                Err(CostError::NoItems(name))
            } else {
                Ok(CostRow::from_totals(name, usage, n))
            }
        })
        .collect()
}

fn group_thousands(v: f64) -> String {
    let s = format!("{:.0}", v);
    let (sign, digits) = s.split_at(if s.starts_with('-') { 1 } else { 0 });
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    format!("{sign}{out}")
}

/// Plain-text table. Published rows are marked.
pub fn render_cost_table(rows: &[CostRow]) -> String {
    let label = |r: &CostRow| match r.source {
        RowSource::Measured => r.strategy.clone(),
        RowSource::Published => format!("{} (published)", r.strategy),
    };
    let width = rows.iter().map(|r| label(r).len()).max().unwrap_or(0).max(8);
    let mut out = format!(
        "{:<width$}  {:>14}  {:>15}  {:>8}  {:>5}\n",
        "Strategy", "# Input Tokens", "# Output Tokens", "# Calls", "n"
    );
    for r in rows {
        let n = match r.source {
            RowSource::Measured => r.n.to_string(),
            RowSource::Published => "-".into(),
        };
        out.push_str(&format!(
            "{:<width$}  {:>14}  {:>15}  {:>8.2}  {:>5}\n",
            label(r),
            group_thousands(r.mean_input_tokens),
            group_thousands(r.mean_output_tokens),
            r.mean_calls,
            n
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{CategoryTotals, LedgerTotals};
    use crate::model::Strategy;

    fn manifest(strategy: Strategy, items: u64, optimizer: UsageStats, checksum: &str) -> RunManifest {
        let mut m = RunManifest::new("optimize", BTreeMap::new(), 0);
        m.strategy = Some(strategy);
        m.items = items;
        m.corpus_checksum = Some(checksum.into());
        m.ledger = LedgerTotals {
            categories: BTreeMap::from([
                (Category::Optimizer, CategoryTotals { accepted: optimizer, ..Default::default() }),
                (Category::Responder, CategoryTotals { accepted: UsageStats::new(10, 10, items), ..Default::default() }),
            ]),
        };
        m
    }

    #[test]
    fn rows_are_sorted_means() {
        let rows = cost_table(
            &[
                manifest(Strategy::MaSapo, 4, UsageStats::new(400, 100, 8), "c"),
                manifest(Strategy::Direct, 2, UsageStats::new(50, 20, 2), "c"),
            ],
            CostView::OptimizerOnly,
            false,
        )
        .unwrap();
        assert_eq!(rows[0].strategy, "direct");
        assert_eq!(rows[0].mean_calls, 1.0);
        assert_eq!(rows[1].strategy, "ma-sapo");
        assert_eq!(rows[1].mean_calls, 2.0);
        assert_eq!(rows[1].mean_input_tokens, 100.0);
    }

    #[test]
    fn responder_view_adds_calls() {
        let rows = cost_table(
            &[manifest(Strategy::MaSapo, 4, UsageStats::new(400, 100, 8), "c")],
            CostView::WithResponder,
            false,
        )
        .unwrap();
        assert_eq!(rows[0].mean_calls, 3.0);
    }

    #[test]
    fn mixed_corpora_need_force() {
        let ms = [
            manifest(Strategy::MaSapo, 1, UsageStats::new(1, 1, 2), "a"),
            manifest(Strategy::Direct, 1, UsageStats::new(1, 1, 1), "b"),
        ];
        assert!(matches!(
            cost_table(&ms, CostView::OptimizerOnly, false),
            Err(CostError::MixedCorpusChecksums(_))
        ));
        assert_eq!(cost_table(&ms, CostView::OptimizerOnly, true).unwrap().len(), 2);
    }

    #[test]
    fn published_rows_render() {
        let t = render_cost_table(&published_rows());
        assert!(t.contains("MAD (published)"));
        assert!(t.contains("17,149"));
        assert!(t.contains("60.00"));
    }
}
