//! Training phase, test phase, single-pass baselines and ablation grids.

mod pool;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pool::run_pool;

use crate::agents::{AgentError, Agents, TokenLimits};
use crate::evaluation::{aggregate, judge_results, EvalError, EvalReport, Judge};
use crate::gateway::{Category, Ledger, LedgerTotals};
use crate::model::{
    OptimizationResult, PromptRecord, ReasoningAssets, RetrievalHit, Strategy, TrainingInstance,
    UsageStats,
};
use crate::retrieval::{Bm25Params, Index};
use crate::store::{Corpus, StoreError};

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_RAG_K: usize = 10;
pub const DEFAULT_PARALLELISM: usize = 4;
pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Split,
    Combined,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Split => "split",
            Variant::Combined => "combined",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "split" => Ok(Variant::Split),
            "combined" => Ok(Variant::Combined),
            other => Err(format!("unknown variant `{other}` (expected split or combined)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("aborted: {failed} of {total} items failed (threshold {threshold})")]
    AbortedTooManyFailures {
        failed: usize,
        total: usize,
        threshold: f64,
    },
    #[error("index does not match corpus: {0}")]
    IndexMismatch(String),
    #[error("strategy {0} needs a retrieval index")]
    IndexRequired(Strategy),
    #[error("ablation grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub k: usize,
    pub variant: Variant,
    pub strategy: Strategy,
    pub parallelism: usize,
    pub seed: u64,
    pub limits: TokenLimits,
    /// Largest tolerated fraction of failed items.
    pub failure_threshold: f64,
    pub bm25: Bm25Params,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            variant: Variant::Split,
            strategy: Strategy::MaSapo,
            parallelism: DEFAULT_PARALLELISM,
            seed: 0,
            limits: TokenLimits::default(),
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            bm25: Bm25Params::default(),
        }
    }
}

impl PipelineConfig {
    /// Default config for `strategy`, with the rag depth applied.
    pub fn for_strategy(strategy: Strategy) -> Self {
        Self {
            k: default_k(strategy),
            strategy,
            ..Self::default()
        }
    }

    /// Strategy after folding in the variant.
    pub fn effective_strategy(&self) -> Strategy {
        match (self.strategy, self.variant) {
            (Strategy::MaSapo, Variant::Combined) => Strategy::MaSapoCombined,
            (s, _) => s,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.strategy.uses_retrieval() && self.k == 0 {
            return Err(PipelineError::InvalidConfig(format!(
                "k must be at least 1 for {}",
                self.strategy
            )));
        }
        if self.parallelism == 0 {
            return Err(PipelineError::InvalidConfig("parallelism must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return Err(PipelineError::InvalidConfig(
                "failure threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

pub fn default_k(strategy: Strategy) -> usize {
    match strategy {
        Strategy::Rag => DEFAULT_RAG_K,
        _ => DEFAULT_K,
    }
}

/// Agents per phase. They may point at different providers.
#[derive(Debug, Clone)]
pub struct Backends {
    pub asset_builder: Agents,
    pub optimizer: Agents,
    pub responder: Agents,
}

impl Backends {
    /// The same agents for every phase.
    pub fn uniform(agents: Agents) -> Self {
        Self {
            asset_builder: agents.clone(),
            optimizer: agents.clone(),
            responder: agents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemFailure {
    pub ordinal: usize,
    pub id: String,
    pub error: String,
}

fn check_threshold(failed: usize, total: usize, threshold: f64) -> Result<(), PipelineError> {
    if total > 0 && failed as f64 / total as f64 > threshold {
        return Err(PipelineError::AbortedTooManyFailures {
            failed,
            total,
            threshold,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Records that lacked assets at the start of the run.
    pub pending: usize,
    /// Ids that received assets, in corpus order.
    pub built: Vec<String>,
    pub failures: Vec<ItemFailure>,
    /// Accepted asset-builder usage.
    pub usage: UsageStats,
}

/// Builds the card, diagnosis and directives for one instance.
pub fn build_assets(
    agents: &Agents,
    instance: &TrainingInstance,
    tape: &mut crate::gateway::CallTape,
) -> Result<ReasoningAssets, AgentError> {
    let card = agents.explain_metrics(instance, tape)?;
    let diagnosis = agents.diagnose(instance, &card, tape)?;
    let directives = agents.synthesize_actions(instance, &card, &diagnosis, tape)?;
    Ok(ReasoningAssets {
        source_id: instance.id().to_string(),
        card,
        diagnosis,
        directives,
    })
}

/// Builds assets for every record lacking them. Successful records are
/// attached to `corpus` even when the run aborts on the failure threshold.
pub fn run_training_phase(
    corpus: &mut Corpus,
    agents: &Agents,
    config: &PipelineConfig,
    ledger: &Ledger,
) -> Result<TrainingReport, PipelineError> {
    if corpus.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    if config.parallelism == 0 {
        return Err(PipelineError::InvalidConfig("parallelism must be positive".into()));
    }
    let pending: Vec<(usize, TrainingInstance)> = corpus
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.assets.is_none())
        .map(|(i, r)| (i, r.instance.clone()))
        .collect();
    let outcomes = run_pool(&pending, config.parallelism, |_, (_, instance)| {
        let mut tape = crate::gateway::CallTape::new();
        let result = build_assets(agents, instance, &mut tape);
        (result, tape)
    });

    let model_id = Some(agents.provider_id().to_string());
    let mut report = TrainingReport {
        pending: pending.len(),
        built: Vec::new(),
        failures: Vec::new(),
        usage: UsageStats::default(),
    };
    for ((ordinal, instance), (result, tape)) in pending.iter().zip(outcomes) {
        let attached = result.map_err(|e| e.to_string()).and_then(|assets| {
            corpus
                .set_assets(instance.id(), assets, model_id.clone(), false)
                .map_err(|e| e.to_string())
        });
        match attached {
            Ok(()) => {
                report.usage += tape.accepted(Category::AssetBuilder);
                report.built.push(instance.id().to_string());
                ledger.commit(tape, true);
            }
            Err(error) => {
                log::warn!("record `{}` failed: {error}", instance.id());
                report.failures.push(ItemFailure {
                    ordinal: *ordinal,
                    id: instance.id().to_string(),
                    error,
                });
                ledger.commit(tape, false);
            }
        }
    }
    check_threshold(report.failures.len(), report.pending, config.failure_threshold)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    /// Successful results in prompt order.
    pub results: Vec<OptimizationResult>,
    pub failures: Vec<ItemFailure>,
    /// Accepted optimizer usage.
    pub usage: UsageStats,
    pub attempted: usize,
}

impl TestReport {
    pub fn failure_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.failures.len() as f64 / self.attempted as f64
        }
    }
}

/// Top-`k` hits for `prompt`, resolved against `corpus`. When
/// `require_assets` is set, every hit must carry assets.
pub fn retrieve(
    index: &Index,
    corpus: &Corpus,
    prompt: &PromptRecord,
    k: usize,
    params: Bm25Params,
    require_assets: bool,
) -> Result<Vec<RetrievalHit>, String> {
    let mut hits = Vec::new();
    for (i, scored) in index.top_k(&prompt.text, k, params).into_iter().enumerate() {
        let record = corpus
            .records()
            .get(scored.ordinal)
            .filter(|r| r.id() == scored.id)
            .ok_or_else(|| format!("index document `{}` is not in the corpus", scored.id))?;
        let assets = match (&record.assets, require_assets) {
            (Some(a), _) => a.clone(),
            (None, true) => return Err(format!("record `{}` has no reasoning assets", scored.id)),
            (None, false) => ReasoningAssets {
                source_id: scored.id.clone(),
                card: String::new(),
                diagnosis: String::new(),
                directives: Vec::new(),
            },
        };
        hits.push(RetrievalHit {
            instance: record.instance.clone(),
            assets,
            score: scored.score,
            rank: i + 1,
        });
    }
    Ok(hits)
}

struct Optimized {
    report: String,
    prompt: PromptRecord,
    strategy: Strategy,
    k_used: usize,
    retrieval_empty: bool,
}

fn optimize_one(
    backends: &Backends,
    retrieval: Option<(&Index, &Corpus)>,
    config: &PipelineConfig,
    strategy: Strategy,
    prompt: &PromptRecord,
    tape: &mut crate::gateway::CallTape,
) -> Result<Optimized, String> {
    let agents = &backends.optimizer;
    let err = |e: AgentError| e.to_string();
    let hits = match (strategy.uses_retrieval(), retrieval) {
        (true, Some((index, corpus))) => retrieve(
            index,
            corpus,
            prompt,
            config.k,
            config.bm25,
            strategy != Strategy::Rag,
        )?,
        (true, None) => return Err(PipelineError::IndexRequired(strategy).to_string()),
        (false, _) => Vec::new(),
    };
    if strategy.uses_retrieval() && hits.is_empty() {
        let (report, prompt) = agents
            .rewrite_single_pass(Strategy::Direct, prompt, &[], tape)
            .map_err(err)?;
        return Ok(Optimized {
            report,
            prompt,
            strategy: Strategy::Direct,
            k_used: 0,
            retrieval_empty: true,
        });
    }
    let (report, optimized) = match strategy {
        Strategy::MaSapo => {
            let report = agents.analyze(prompt, &hits, tape).map_err(err)?;
            let optimized = agents.refine(prompt, &report, tape).map_err(err)?;
            (report, optimized)
        }
        Strategy::MaSapoCombined => agents
            .analyze_and_refine_combined(prompt, &hits, tape)
            .map_err(err)?,
        baseline => {
            let exemplars: Vec<&TrainingInstance> = hits.iter().map(|h| &h.instance).collect();
            agents
                .rewrite_single_pass(baseline, prompt, &exemplars, tape)
                .map_err(err)?
        }
    };
    Ok(Optimized {
        report,
        prompt: optimized,
        strategy,
        k_used: hits.len(),
        retrieval_empty: false,
    })
}

fn run_prompts(
    prompts: &[PromptRecord],
    retrieval: Option<(&Index, &Corpus)>,
    backends: &Backends,
    config: &PipelineConfig,
    ledger: &Ledger,
) -> Result<TestReport, PipelineError> {
    config.validate()?;
    if let Some((index, corpus)) = retrieval {
        if index.doc_count() != corpus.len() {
            return Err(PipelineError::IndexMismatch(format!(
                "index has {} documents, corpus has {} records",
                index.doc_count(),
                corpus.len()
            )));
        }
    }
    let strategy = config.effective_strategy();
    let outcomes = run_pool(prompts, config.parallelism, |_, prompt| {
        let mut tape = crate::gateway::CallTape::new();
        let result = optimize_one(backends, retrieval, config, strategy, prompt, &mut tape)
            .and_then(|o| {
                let response = backends
                    .responder
                    .respond(&o.prompt, &mut tape)
                    .map_err(|e| e.to_string())?;
                Ok(OptimizationResult {
                    original: prompt.clone(),
                    report: o.report,
                    optimized_prompt: o.prompt,
                    optimized_response: response,
                    usage: tape.accepted(Category::Optimizer),
                    judged: None,
                    strategy: o.strategy,
                    k_used: o.k_used,
                    retrieval_empty: o.retrieval_empty,
                })
            });
        (result, tape)
    });

    let mut report = TestReport {
        results: Vec::new(),
        failures: Vec::new(),
        usage: UsageStats::default(),
        attempted: prompts.len(),
    };
    for (ordinal, (prompt, (result, tape))) in prompts.iter().zip(outcomes).enumerate() {
        match result {
            Ok(result) => {
                if result.retrieval_empty {
                    log::info!("prompt `{}` had no retrieval hits; used direct", prompt.id);
                }
                report.usage += result.usage;
                report.results.push(result);
                ledger.commit(tape, true);
            }
            Err(error) => {
                log::warn!("prompt `{}` failed: {error}", prompt.id);
                report.failures.push(ItemFailure {
                    ordinal,
                    id: prompt.id.clone(),
                    error,
                });
                ledger.commit(tape, false);
            }
        }
    }
    Ok(report)
}

/// Retrieve, analyze, refine and respond for each prompt, using the strategy
/// and variant in `config`.
pub fn run_test_phase(
    prompts: &[PromptRecord],
    corpus: &Corpus,
    index: &Index,
    backends: &Backends,
    config: &PipelineConfig,
    ledger: &Ledger,
) -> Result<TestReport, PipelineError> {
    run_prompts(prompts, Some((index, corpus)), backends, config, ledger)
}

/// One-pass baseline. Only `rag` needs the corpus and index.
pub fn run_baseline(
    strategy: Strategy,
    prompts: &[PromptRecord],
    retrieval: Option<(&Corpus, &Index)>,
    backends: &Backends,
    config: &PipelineConfig,
    ledger: &Ledger,
) -> Result<TestReport, PipelineError> {
    if matches!(strategy, Strategy::MaSapo | Strategy::MaSapoCombined) {
        return Err(PipelineError::InvalidConfig(format!(
            "{strategy} is not a single-pass baseline"
        )));
    }
    if strategy == Strategy::Rag && retrieval.is_none() {
        return Err(PipelineError::IndexRequired(strategy));
    }
    let config = PipelineConfig {
        strategy,
        ..config.clone()
    };
    let retrieval = retrieval
        .filter(|_| strategy.uses_retrieval())
        .map(|(c, i)| (i, c));
    run_prompts(prompts, retrieval, backends, &config, ledger)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub report: EvalReport,
    pub ledger: LedgerTotals,
    pub failures: usize,
}

#[derive(Debug)]
pub struct GridRow {
    pub k: usize,
    pub variant: Variant,
    pub outcome: Result<CellSummary, String>,
}

/// One test phase per `(k, variant)` cell, each judged and aggregated.
/// A failing cell is reported and the grid carries on.
pub fn run_ablation_grid(
    prompts: &[PromptRecord],
    corpus: &Corpus,
    index: &Index,
    backends: &Backends,
    base: &PipelineConfig,
    judge: &dyn Judge,
    grid: &[(usize, Variant)],
) -> Result<Vec<GridRow>, PipelineError> {
    if grid.is_empty() {
        return Err(PipelineError::EmptyGrid);
    }
    let rows = grid
        .iter()
        .map(|&(k, variant)| {
            let config = PipelineConfig {
                k,
                variant,
                strategy: Strategy::MaSapo,
                ..base.clone()
            };
            let outcome = run_cell(prompts, corpus, index, backends, &config, judge);
            if let Err(e) = &outcome {
                log::warn!("cell k={k} variant={variant} failed: {e}");
            }
            GridRow {
                k,
                variant,
                outcome,
            }
        })
        .collect();
    Ok(rows)
}

fn run_cell(
    prompts: &[PromptRecord],
    corpus: &Corpus,
    index: &Index,
    backends: &Backends,
    config: &PipelineConfig,
    judge: &dyn Judge,
) -> Result<CellSummary, String> {
    let ledger = Ledger::new();
    let mut test =
        run_test_phase(prompts, corpus, index, backends, config, &ledger).map_err(|e| e.to_string())?;
    check_threshold(test.failures.len(), test.attempted, config.failure_threshold)
        .map_err(|e| e.to_string())?;
    let tapes = judge_results(judge, &mut test.results).map_err(|e| e.to_string())?;
    let judge_usage = tapes.iter().map(|t| t.accepted(Category::Judge)).sum();
    for tape in tapes {
        ledger.commit(tape, true);
    }
    let report = aggregate(&test.results, judge_usage).map_err(|e| e.to_string())?;
    Ok(CellSummary {
        report,
        ledger: ledger.totals(),
        failures: test.failures.len(),
    })
}

/// Fails when `report` breaches the configured failure threshold.
pub fn enforce_threshold(report: &TestReport, config: &PipelineConfig) -> Result<(), PipelineError> {
    check_threshold(report.failures.len(), report.attempted, config.failure_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::agents::TemplateSet;
    use crate::gateway::{FaultInjector, Gateway, GatewayError, MockProvider, RetryPolicy};
    use crate::model::ScoreVector;
    use crate::store::CorpusRecord;

    fn corpus(n: usize) -> Corpus {
        let records = (0..n)
            .map(|i| {
                let prompt = PromptRecord::single(
                    i.to_string(),
                    format!("explain topic{i} with shared words about rivers"),
                )
                .unwrap();
                CorpusRecord::new(TrainingInstance {
                    prompt,
                    response: format!("an answer about topic{i}"),
                    scores: ScoreVector::uniform(2.0).unwrap(),
                })
            })
            .collect();
        Corpus::from_records(records).unwrap()
    }

    fn agents(provider: Arc<dyn crate::gateway::ChatProvider>) -> Agents {
        Agents::new(
            Gateway::new(provider).with_retry(RetryPolicy::no_retry()),
            Arc::new(TemplateSet::builtin()),
        )
    }

    fn mock() -> Agents {
        agents(Arc::new(MockProvider::new(7)))
    }

    #[test]
    fn training_makes_three_calls_per_record_and_is_idempotent() {
        let mut c = corpus(5);
        let ledger = Ledger::new();
        let r = run_training_phase(&mut c, &mock(), &PipelineConfig::default(), &ledger).unwrap();
        assert_eq!(r.built.len(), 5);
        assert_eq!(ledger.totals().accepted(Category::AssetBuilder).calls, 15);
        assert_eq!(c.asset_coverage(), 1.0);

        let again = Ledger::new();
        let r = run_training_phase(&mut c, &mock(), &PipelineConfig::default(), &again).unwrap();
        assert_eq!(r.pending, 0);
        assert!(again.entries().is_empty());
    }

    #[test]
    fn training_isolates_a_failing_record() {
        let mut c = corpus(20);
        let faulty = FaultInjector::new(Arc::new(MockProvider::new(7)))
            .fail_when("explain topic13 ", GatewayError::Provider { status: 500, message: "boom".into() });
        let ledger = Ledger::new();
        let r = run_training_phase(&mut c, &agents(Arc::new(faulty)), &PipelineConfig::default(), &ledger)
            .unwrap();
        assert_eq!(r.built.len(), 19);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].id, "13");
        assert!(c.get("13").unwrap().assets.is_none());
        assert_eq!(ledger.totals().accepted(Category::AssetBuilder).calls, 57);
    }

    #[test]
    fn training_aborts_above_threshold() {
        let mut c = corpus(4);
        let faulty = FaultInjector::new(Arc::new(MockProvider::new(7)))
            .fail_when("topic1 ", GatewayError::Provider { status: 500, message: "x".into() });
        let err = run_training_phase(&mut c, &agents(Arc::new(faulty)), &PipelineConfig::default(), &Ledger::new())
            .unwrap_err();
        assert!(matches!(err, PipelineError::AbortedTooManyFailures { failed: 1, total: 4, .. }));
        assert_eq!(c.asset_coverage(), 0.75);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let mut c = Corpus::from_records(Vec::new()).unwrap();
        assert!(matches!(
            run_training_phase(&mut c, &mock(), &PipelineConfig::default(), &Ledger::new()),
            Err(PipelineError::EmptyCorpus)
        ));
    }

    fn prepared(n: usize) -> (Corpus, Index) {
        let mut c = corpus(n);
        run_training_phase(&mut c, &mock(), &PipelineConfig::default(), &Ledger::new()).unwrap();
        let index = Index::build(c.documents()).unwrap();
        (c, index)
    }

    fn prompts(n: usize) -> Vec<PromptRecord> {
        (0..n)
            .map(|i| PromptRecord::single(format!("t{i}"), format!("rivers and topic{i}")).unwrap())
            .collect()
    }

    #[test]
    fn split_and_combined_call_counts() {
        let (c, index) = prepared(6);
        let b = Backends::uniform(mock());
        for (variant, per_prompt) in [(Variant::Split, 2), (Variant::Combined, 1)] {
            let ledger = Ledger::new();
            let config = PipelineConfig {
                variant,
                ..PipelineConfig::default()
            };
            let r = run_test_phase(&prompts(4), &c, &index, &b, &config, &ledger).unwrap();
            assert_eq!(r.results.len(), 4);
            let totals = ledger.totals();
            assert_eq!(totals.accepted(Category::Optimizer).calls, 4 * per_prompt);
            assert_eq!(totals.accepted(Category::Responder).calls, 4);
            assert!(r.results.iter().all(|x| x.k_used == 3));
        }
    }

    #[test]
    fn empty_retrieval_falls_back_to_direct() {
        let (c, index) = prepared(3);
        let ledger = Ledger::new();
        let p = vec![PromptRecord::single("z", "zzz qqq").unwrap()];
        let r = run_test_phase(&p, &c, &index, &Backends::uniform(mock()), &PipelineConfig::default(), &ledger)
            .unwrap();
        assert!(r.results[0].retrieval_empty);
        assert_eq!(r.results[0].strategy, Strategy::Direct);
        assert_eq!(ledger.totals().accepted(Category::Optimizer).calls, 1);
    }

    #[test]
    fn baselines_make_one_optimizer_call() {
        let (c, index) = prepared(12);
        for s in [Strategy::Direct, Strategy::Cot, Strategy::Role, Strategy::Rag] {
            let ledger = Ledger::new();
            let config = PipelineConfig::for_strategy(s);
            let r = run_baseline(s, &prompts(3), Some((&c, &index)), &Backends::uniform(mock()), &config, &ledger)
                .unwrap();
            assert_eq!(r.results.len(), 3, "{s}");
            assert_eq!(ledger.totals().accepted(Category::Optimizer).calls, 3);
            assert_eq!(ledger.totals().accepted(Category::Responder).calls, 3);
            let expect_k = if s == Strategy::Rag { 10 } else { 0 };
            assert!(r.results.iter().all(|x| x.k_used == expect_k));
        }
        assert!(matches!(
            run_baseline(Strategy::Rag, &prompts(1), None, &Backends::uniform(mock()), &PipelineConfig::default(), &Ledger::new()),
            Err(PipelineError::IndexRequired(Strategy::Rag))
        ));
    }

    #[test]
    fn k_zero_is_invalid() {
        let config = PipelineConfig {
            k: 0,
            ..PipelineConfig::default()
        };
        assert!(config.validate().is_err());
        let direct = PipelineConfig {
            k: 0,
            strategy: Strategy::Direct,
            ..PipelineConfig::default()
        };
        assert!(direct.validate().is_ok());
    }

    #[test]
    fn grid_rows() {
        let (c, index) = prepared(6);
        let b = Backends::uniform(mock());
        let judge = crate::evaluation::MockJudge;
        let rows = run_ablation_grid(
            &prompts(2),
            &c,
            &index,
            &b,
            &PipelineConfig::default(),
            &judge,
            &[(1, Variant::Split), (3, Variant::Split), (3, Variant::Combined)],
        )
        .unwrap();
        let calls: Vec<u64> = rows
            .iter()
            .map(|r| r.outcome.as_ref().unwrap().ledger.accepted(Category::Optimizer).calls)
            .collect();
        assert_eq!(calls, [4, 4, 2]);
        assert!(matches!(
            run_ablation_grid(&prompts(1), &c, &index, &b, &PipelineConfig::default(), &judge, &[]),
            Err(PipelineError::EmptyGrid)
        ));
    }

    #[test]
    fn grid_reports_failed_cell_and_continues() {
        let (c, index) = prepared(6);
        let b = Backends::uniform(mock());
        let rows = run_ablation_grid(
            &prompts(2),
            &c,
            &index,
            &b,
            &PipelineConfig::default(),
            &crate::evaluation::MockJudge,
            &[(0, Variant::Split), (2, Variant::Split)],
        )
        .unwrap();
        assert!(rows[0].outcome.is_err());
        assert!(rows[1].outcome.is_ok());
    }
}
