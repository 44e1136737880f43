//! The `assetopt` command line.
//!
//! Exit codes: 0 success, 1 fatal error, 2 quality threshold breached,
//! 64 usage error.

pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use assetopt::agents::{Agents, TemplateSet, TokenLimits};
use assetopt::cost::{cost_table, published_rows, render_cost_table, CostError, CostView};
use assetopt::digest::sha256_hex;
use assetopt::evaluation::{
    aggregate, judge_results, render_table, EvalError, Judge, MockJudge, TableRow,
};
use assetopt::gateway::{
    Category, ChatProvider, Gateway, Ledger, LedgerTotals, MockProvider, RetryPolicy,
};
use assetopt::manifest::{manifest_path, RunManifest};
use assetopt::model::{Strategy, UsageStats};
use assetopt::pipeline::{
    default_k, enforce_threshold, run_ablation_grid, run_baseline, run_test_phase,
    run_training_phase, Backends, PipelineConfig, PipelineError, TestReport, Variant,
};
use assetopt::retrieval::{read_index, write_index, Index};
use assetopt::store::{
    atomic_write, ingest_dataset, read_prompts, read_results, timestamp_now, write_results,
    Corpus, DatasetFormat,
};

use config::Settings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_THRESHOLD: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variables read for credentials and endpoints.
pub const CREDENTIAL_ENV: [&str; 4] = [
    "ASSETOPT_API_KEY",
    "OPENAI_API_KEY",
    "ASSETOPT_JUDGE_API_KEY",
    "ASSETOPT_BASE_URL",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn fatal(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_FATAL,
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    pub fn threshold(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_THRESHOLD,
            message: message.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "assetopt", version, about = "Retrieval-augmented prompt optimization")]
struct Cli {
    /// Key-value config file (also ASSETOPT_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a HelpSteer-style dataset and write a corpus.
    Ingest(IngestArgs),
    /// Build reasoning assets for corpus records that lack them.
    BuildAssets(BuildAssetsArgs),
    /// Build the BM25 index over corpus prompts.
    Index(IndexArgs),
    /// Optimize test prompts with one strategy.
    Optimize(OptimizeArgs),
    /// Judge optimized responses and write a score report.
    Evaluate(EvaluateArgs),
    /// Per-instance token and call averages across optimize runs.
    Cost(CostArgs),
    /// Run the test phase over a grid of (k, variant) cells.
    Ablate(AblateArgs),
}

#[derive(Debug, Args, Serialize)]
struct ProviderArgs {
    /// `mock` or `openai:<model>`.
    #[arg(long)]
    provider: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Largest tolerated fraction of failed items.
    #[arg(long)]
    failure_threshold: Option<f64>,
    /// Directory of template overrides.
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// helpsteer-jsonl or helpsteer-csv.
    #[arg(long)]
    format: String,
    #[arg(long)]
    corpus: PathBuf,
    /// Largest tolerated fraction of rejected rows.
    #[arg(long)]
    reject_threshold: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct BuildAssetsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    common: ProviderArgs,
}

#[derive(Debug, Args, Serialize)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    index: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Loaded when present, otherwise built and written.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    prompts: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    /// split or combined.
    #[arg(long)]
    variant: Option<String>,
    /// ma-sapo, direct, cot, role or rag.
    #[arg(long)]
    strategy: Option<String>,
    /// Provider for response generation; defaults to --provider.
    #[arg(long)]
    responder_provider: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    common: ProviderArgs,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    results: PathBuf,
    /// mock or live.
    #[arg(long)]
    judge: Option<String>,
    /// JSON report path; the text table goes next to it with a `.txt` extension.
    #[arg(long)]
    report: PathBuf,
    /// Scoring endpoint for the live judge.
    #[arg(long)]
    judge_url: Option<String>,
    /// raw (0-4) or unit (0-1, multiplied by 4).
    #[arg(long)]
    judge_scale: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct CostArgs {
    /// Optimize-run manifests.
    #[arg(long = "manifest", required = true, num_args = 1..)]
    manifests: Vec<PathBuf>,
    /// Machine-readable rows.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare runs over different corpora.
    #[arg(long)]
    force: bool,
    /// Count responder calls too.
    #[arg(long)]
    with_responder: bool,
    /// Leave out the published reference rows.
    #[arg(long)]
    no_published: bool,
}

#[derive(Debug, Args, Serialize)]
struct AblateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    prompts: PathBuf,
    /// Comma-separated `k:variant` cells.
    #[arg(long, default_value = "1:split,2:split,3:split,4:split,3:combined")]
    grid: String,
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    common: ProviderArgs,
}

/// Runs the CLI with the process environment.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::vars())
}

pub fn run_with_env<I, T>(args: I, env: impl IntoIterator<Item = (String, String)>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    let outcome = Settings::new(env, cli.config.as_deref()).and_then(|mut settings| {
        match &cli.command {
            Command::Ingest(a) => cmd_ingest(a, &mut settings),
            Command::BuildAssets(a) => cmd_build_assets(a, &mut settings),
            Command::Index(a) => cmd_index(a, &mut settings),
            Command::Optimize(a) => cmd_optimize(a, &mut settings),
            Command::Evaluate(a) => cmd_evaluate(a, &mut settings),
            Command::Cost(a) => cmd_cost(a, &mut settings),
            Command::Ablate(a) => cmd_ablate(a, &mut settings),
        }
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Flag snapshot for the manifest: every flag that was set, as text.
fn flag_snapshot(args: &impl Serialize) -> BTreeMap<String, String> {
    let value = serde_json::to_value(args).expect("flags serialize");
    let mut out = BTreeMap::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let text = match v {
                serde_json::Value::Null => continue,
                serde_json::Value::Bool(false) => continue,
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.insert(k.replace('_', "-"), text);
        }
    }
    out
}

struct Run {
    manifest: RunManifest,
}

impl Run {
    fn start(command: &str, args: &impl Serialize) -> Self {
        let mut manifest = RunManifest::new(command, BTreeMap::new(), 0);
        manifest.flags = flag_snapshot(args);
        manifest.started_at = timestamp_now();
        Self { manifest }
    }

    fn finish(mut self, settings: &Settings, seed: u64, path: &Path) -> CliResult {
        self.manifest.config = settings.resolved().clone();
        self.manifest.config_digest = assetopt::manifest::config_digest(&self.manifest.config);
        self.manifest.seed = seed;
        self.manifest.finished_at = timestamp_now();
        self.manifest.write(path).map_err(CliError::fatal)
    }
}

fn file_digest(path: &Path) -> CliResult<String> {
    std::fs::read(path)
        .map(|b| sha256_hex(&b))
        .map_err(|e| CliError::fatal(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    atomic_write(path, text.as_bytes())
        .map_err(|e| CliError::fatal(format!("cannot write {}: {e}", path.display())))
}

fn parse_flag<T>(raw: &str, what: &str) -> CliResult<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| CliError::usage(format!("invalid {what}: {e}")))
}

fn check_fraction(value: f64, what: &str) -> CliResult<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(CliError::usage(format!("{what} must lie in [0, 1], got {value}")))
    }
}

fn cmd_ingest(args: &IngestArgs, settings: &mut Settings) -> CliResult {
    let run = Run::start("ingest", args);
    let format: DatasetFormat = parse_flag(&args.format, "format")?;
    let threshold = check_fraction(
        settings.parse("reject_threshold", args.reject_threshold, 0.10)?,
        "reject threshold",
    )?;
    let report = ingest_dataset(&args.input, format).map_err(CliError::fatal)?;
    for reject in &report.rejects {
        eprintln!("reject row {}: {}", reject.row, reject.reason);
    }
    if !report.ignored_fields.is_empty() {
        let fields: Vec<_> = report.ignored_fields.iter().map(String::as_str).collect();
        eprintln!("note: ignored fields: {}", fields.join(", "));
    }
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    if report.reject_rate() > threshold {
        return Err(CliError::threshold(format!(
            "{} of {} rows rejected ({:.1}%), above the {:.1}% threshold; corpus not written",
            report.rejects.len(),
            report.rejects.len() + report.count(),
            100.0 * report.reject_rate(),
            100.0 * threshold
        )));
    }
    let count = report.count();
    let rejected = report.rejects.len();
    let corpus = Corpus::create(&args.corpus, report.records).map_err(CliError::fatal)?;
    println!(
        "ingested {count} records ({rejected} rejected) into {}",
        args.corpus.display()
    );

    let mut run = run;
    run.manifest.corpus_checksum = Some(corpus.checksum());
    run.manifest.items = count as u64;
    run.manifest.failed_items = rejected as u64;
    run.manifest
        .outputs
        .insert("corpus".into(), corpus.checksum());
    drop(corpus);
    run.finish(settings, 0, &manifest_path(&args.corpus, "ingest"))
}

struct ProviderSetup {
    seed: u64,
    parallelism: usize,
    failure_threshold: f64,
    templates: Arc<TemplateSet>,
    limits: TokenLimits,
}

fn provider_setup(common: &ProviderArgs, settings: &mut Settings) -> CliResult<ProviderSetup> {
    let seed = settings.parse("seed", common.seed, 0u64)?;
    let parallelism = settings.parse("parallelism", common.parallelism, 4usize)?;
    if parallelism == 0 {
        return Err(CliError::usage("parallelism must be positive"));
    }
    let failure_threshold = check_fraction(
        settings.parse("failure_threshold", common.failure_threshold, 0.10)?,
        "failure threshold",
    )?;
    let defaults = TokenLimits::default();
    let limits = TokenLimits {
        analysis: settings.parse("max_analysis_tokens", None, defaults.analysis)?,
        generation: settings.parse("max_generation_tokens", None, defaults.generation)?,
    };
    let dir = settings.optional(
        "templates",
        common.templates.as_ref().map(|p| p.display().to_string()),
    );
    let templates = match dir {
        Some(dir) => TemplateSet::load_dir(Path::new(&dir)).map_err(CliError::fatal)?,
        None => TemplateSet::builtin(),
    };
    Ok(ProviderSetup {
        seed,
        parallelism,
        failure_threshold,
        templates: Arc::new(templates),
        limits,
    })
}

fn make_provider(
    id: &str,
    seed: u64,
    settings: &mut Settings,
) -> CliResult<Arc<dyn ChatProvider>> {
    if id == "mock" {
        return Ok(Arc::new(MockProvider::new(seed)));
    }
    #[cfg(feature = "live")]
    if let Some(model) = id.strip_prefix("openai:") {
        use assetopt::gateway::openai::{OpenAiConfig, OpenAiProvider, DEFAULT_BASE_URL};
        let base_url = settings.string("base_url", None, DEFAULT_BASE_URL);
        let mut config = OpenAiConfig::new(base_url, model);
        config.api_key = settings
            .optional("api_key", None)
            .or_else(|| std::env::var("OPENAI_API_KEY").ok());
        let provider = OpenAiProvider::new(config).map_err(CliError::fatal)?;
        return Ok(Arc::new(provider));
    }
    let _ = settings;
    Err(CliError::fatal(format!(
        "config error: unknown provider `{id}` (expected mock or openai:<model>)"
    )))
}

fn make_agents(id: &str, setup: &ProviderSetup, settings: &mut Settings) -> CliResult<Agents> {
    let provider = make_provider(id, setup.seed, settings)?;
    let retry = if id == "mock" {
        RetryPolicy::no_retry()
    } else {
        RetryPolicy::default()
    };
    Ok(
        Agents::new(Gateway::new(provider).with_retry(retry), setup.templates.clone())
            .with_limits(setup.limits),
    )
}

fn usage_line(label: &str, usage: UsageStats) -> String {
    format!(
        "{label}: calls={} input_tokens={} output_tokens={}",
        usage.calls, usage.input_tokens, usage.output_tokens
    )
}

fn print_ledger(totals: &LedgerTotals) {
    for (category, t) in &totals.categories {
        println!(
            "{} failed_attempts={}",
            usage_line(category.name(), t.accepted),
            t.failed_attempts
        );
    }
}

fn cmd_build_assets(args: &BuildAssetsArgs, settings: &mut Settings) -> CliResult {
    let mut run = Run::start("build-assets", args);
    let setup = provider_setup(&args.common, settings)?;
    let provider_id = settings.string("provider", args.common.provider.clone(), "mock");
    let agents = make_agents(&provider_id, &setup, settings)?;
    let mut corpus = Corpus::open_for_write(&args.corpus).map_err(CliError::fatal)?;
    let config = PipelineConfig {
        parallelism: setup.parallelism,
        seed: setup.seed,
        limits: setup.limits,
        failure_threshold: setup.failure_threshold,
        ..PipelineConfig::default()
    };
    let ledger = Ledger::new();
    let outcome = run_training_phase(&mut corpus, &agents, &config, &ledger);
    // Keep whatever was built, even on abort.
    corpus.save().map_err(CliError::fatal)?;
    let report = match outcome {
        Ok(report) => report,
        Err(PipelineError::EmptyCorpus) => {
            println!("corpus is empty; nothing to build");
            print_ledger(&ledger.totals());
            return Ok(());
        }
        Err(e) => return Err(CliError::fatal(e)),
    };
    for id in &report.built {
        println!("built {id}");
    }
    for f in &report.failures {
        println!("failed {}: {}", f.id, f.error);
    }
    println!(
        "{} of {} pending records built",
        report.built.len(),
        report.pending
    );
    let totals = ledger.totals();
    println!("{}", usage_line("totals", totals.accepted(Category::AssetBuilder)));

    run.manifest.corpus_checksum = Some(corpus.checksum());
    run.manifest
        .provider_ids
        .insert("asset-builder".into(), agents.provider_id().to_string());
    run.manifest.items = report.built.len() as u64;
    run.manifest.failed_items = report.failures.len() as u64;
    run.manifest.ledger = totals;
    run.manifest
        .outputs
        .insert("corpus".into(), corpus.checksum());
    drop(corpus);
    run.finish(settings, setup.seed, &manifest_path(&args.corpus, "build-assets"))
}

fn build_index(corpus: &Corpus) -> CliResult<Index> {
    Index::build(corpus.documents()).map_err(CliError::fatal)
}

/// Loads the index at `path` if it exists and matches `corpus`, otherwise
/// builds and writes it.
fn load_or_build_index(corpus: &Corpus, path: Option<&Path>) -> CliResult<Index> {
    let digest = corpus.documents_digest();
    let Some(path) = path else {
        return build_index(corpus);
    };
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::fatal(format!("cannot read {}: {e}", path.display())))?;
        let (index, stamp) = read_index(&text).map_err(CliError::fatal)?;
        if stamp.as_deref() != Some(digest.as_str()) {
            return Err(CliError::fatal(format!(
                "index {} was built over a different corpus; rebuild it with `assetopt index`",
                path.display()
            )));
        }
        return Ok(index);
    }
    let index = build_index(corpus)?;
    write_text(path, &write_index(&index, Some(&digest)))?;
    Ok(index)
}

fn cmd_index(args: &IndexArgs, settings: &mut Settings) -> CliResult {
    let mut run = Run::start("index", args);
    let corpus = Corpus::load(&args.corpus).map_err(CliError::fatal)?;
    let index = build_index(&corpus)?;
    write_text(&args.index, &write_index(&index, Some(&corpus.documents_digest())))?;
    println!(
        "indexed {} documents ({} terms) into {}",
        index.doc_count(),
        index.terms().count(),
        args.index.display()
    );
    run.manifest.corpus_checksum = Some(corpus.checksum());
    run.manifest.items = index.doc_count() as u64;
    run.manifest
        .outputs
        .insert("index".into(), file_digest(&args.index)?);
    run.finish(settings, 0, &manifest_path(&args.index, "index"))
}

struct OptimizeSetup {
    strategy: Strategy,
    config: PipelineConfig,
    provider_id: String,
    responder_id: String,
    setup: ProviderSetup,
}

fn optimize_setup(
    common: &ProviderArgs,
    strategy: Option<String>,
    k: Option<usize>,
    variant: Option<String>,
    responder: Option<String>,
    settings: &mut Settings,
) -> CliResult<OptimizeSetup> {
    let setup = provider_setup(common, settings)?;
    let strategy: Strategy = parse_flag(&settings.string("strategy", strategy, "ma-sapo"), "strategy")?;
    if strategy == Strategy::MaSapoCombined {
        return Err(CliError::usage(
            "use --strategy ma-sapo --variant combined for the combined variant",
        ));
    }
    let k = settings.parse("k", k, default_k(strategy))?;
    if k == 0 {
        return Err(CliError::usage("k must be at least 1"));
    }
    let variant: Variant = parse_flag(&settings.string("variant", variant, "split"), "variant")?;
    let provider_id = settings.string("provider", common.provider.clone(), "mock");
    let responder_id = settings.string("responder_provider", responder, &provider_id);
    let config = PipelineConfig {
        k,
        variant,
        strategy,
        parallelism: setup.parallelism,
        seed: setup.seed,
        limits: setup.limits,
        failure_threshold: setup.failure_threshold,
        ..PipelineConfig::default()
    };
    Ok(OptimizeSetup {
        strategy,
        config,
        provider_id,
        responder_id,
        setup,
    })
}

fn report_failures(report: &TestReport) {
    for f in &report.failures {
        eprintln!("prompt {} failed: {}", f.id, f.error);
    }
}

fn cmd_optimize(args: &OptimizeArgs, settings: &mut Settings) -> CliResult {
    let mut run = Run::start("optimize", args);
    let o = optimize_setup(
        &args.common,
        args.strategy.clone(),
        args.k,
        args.variant.clone(),
        args.responder_provider.clone(),
        settings,
    )?;
    let optimizer = make_agents(&o.provider_id, &o.setup, settings)?;
    let responder = make_agents(&o.responder_id, &o.setup, settings)?;
    let backends = Backends {
        asset_builder: optimizer.clone(),
        optimizer,
        responder,
    };
    let prompts = read_prompts(&args.prompts).map_err(CliError::fatal)?;

    let corpus = match &args.corpus {
        Some(path) => Some(Corpus::load(path).map_err(CliError::fatal)?),
        None if o.strategy.uses_retrieval() => {
            return Err(CliError::usage(format!("--corpus is required for {}", o.strategy)))
        }
        None => None,
    };
    let index = match &corpus {
        Some(c) if o.strategy.uses_retrieval() => Some(load_or_build_index(c, args.index.as_deref())?),
        _ => None,
    };

    let ledger = Ledger::new();
    let report = match (o.strategy, &corpus, &index) {
        (Strategy::MaSapo, Some(c), Some(i)) => {
            run_test_phase(&prompts, c, i, &backends, &o.config, &ledger)
        }
        (s, c, i) => run_baseline(s, &prompts, c.as_ref().zip(i.as_ref()), &backends, &o.config, &ledger),
    }
    .map_err(CliError::fatal)?;
    report_failures(&report);
    enforce_threshold(&report, &o.config).map_err(CliError::fatal)?;

    write_results(&args.out, &report.results).map_err(CliError::fatal)?;
    let totals = ledger.totals();
    let fallbacks = report.results.iter().filter(|r| r.retrieval_empty).count();
    println!(
        "optimized {} prompts with {} ({} failed, {} fell back to direct)",
        report.results.len(),
        o.config.effective_strategy(),
        report.failures.len(),
        fallbacks
    );
    print_ledger(&totals);

    let m = &mut run.manifest;
    m.corpus_checksum = corpus.as_ref().map(Corpus::checksum);
    m.strategy = Some(o.config.effective_strategy());
    m.provider_ids.insert("optimizer".into(), backends.optimizer.provider_id().to_string());
    m.provider_ids.insert("responder".into(), backends.responder.provider_id().to_string());
    m.items = report.results.len() as u64;
    m.failed_items = report.failures.len() as u64;
    m.ledger = totals;
    m.outputs.insert("results".into(), file_digest(&args.out)?);
    m.outputs.insert("templates".into(), o.setup.templates.digest());
    run.finish(settings, o.setup.seed, &manifest_path(&args.out, "optimize"))
}

fn make_judge(args: &EvaluateArgs, settings: &mut Settings) -> CliResult<Box<dyn Judge>> {
    let kind = settings.string("judge", args.judge.clone(), "mock");
    match kind.as_str() {
        "mock" => Ok(Box::new(MockJudge)),
        #[cfg(feature = "live")]
        "live" => {
            use assetopt::evaluation::live::{JudgeScale, LiveJudge, LiveJudgeConfig};
            let endpoint = settings
                .optional("judge_url", args.judge_url.clone())
                .ok_or_else(|| CliError::usage("--judge live needs --judge-url or ASSETOPT_JUDGE_URL"))?;
            let scale: JudgeScale =
                parse_flag(&settings.string("judge_scale", args.judge_scale.clone(), "raw"), "judge scale")?;
            let config = LiveJudgeConfig {
                endpoint,
                api_key: settings.optional("judge_api_key", None),
                scale,
                timeout: std::time::Duration::from_secs(120),
            };
            Ok(Box::new(LiveJudge::new(config).map_err(CliError::fatal)?))
        }
        other => Err(CliError::usage(format!("unknown judge `{other}` (expected mock or live)"))),
    }
}

fn table_path(report: &Path) -> CliResult<PathBuf> {
    if report.extension().is_some_and(|e| e == "txt") {
        return Err(CliError::usage("--report must not have a .txt extension"));
    }
    Ok(report.with_extension("txt"))
}

fn cmd_evaluate(args: &EvaluateArgs, settings: &mut Settings) -> CliResult {
    let mut run = Run::start("evaluate", args);
    let table = table_path(&args.report)?;
    let judge = make_judge(args, settings)?;
    let mut results = read_results(&args.results).map_err(CliError::fatal)?;
    if results.is_empty() {
        return Err(CliError::fatal(EvalError::EmptyResults));
    }
    let ledger = Ledger::new();
    let tapes = judge_results(judge.as_ref(), &mut results).map_err(CliError::fatal)?;
    for tape in tapes {
        ledger.commit(tape, true);
    }
    let totals = ledger.totals();
    let report = aggregate(&results, totals.accepted(Category::Judge)).map_err(CliError::fatal)?;

    let mut names: Vec<&str> = results.iter().map(|r| r.strategy.name()).collect();
    names.sort();
    names.dedup();
    let label = names.join("+");
    let body = json!({ "judge": judge.id(), "strategy": label, "report": report });
    let mut text = serde_json::to_string_pretty(&body).expect("report serializes");
    text.push('\n');
    write_text(&args.report, &text)?;
    let rendered = render_table(&[TableRow::from_report(&label, &report)]);
    write_text(&table, &rendered)?;
    print!("{rendered}");
    println!("n={} judge={}", report.n, judge.id());

    let m = &mut run.manifest;
    m.provider_ids.insert("judge".into(), judge.id().to_string());
    m.items = report.n as u64;
    m.ledger = totals;
    m.outputs.insert("report".into(), file_digest(&args.report)?);
    m.outputs.insert("table".into(), file_digest(&table)?);
    run.finish(settings, 0, &manifest_path(&args.report, "evaluate"))
}

fn cmd_cost(args: &CostArgs, settings: &mut Settings) -> CliResult {
    let mut run = Run::start("cost", args);
    let manifests = args
        .manifests
        .iter()
        .map(|p| RunManifest::read(p).map_err(CliError::fatal))
        .collect::<CliResult<Vec<_>>>()?;
    let view = if args.with_responder {
        CostView::WithResponder
    } else {
        CostView::OptimizerOnly
    };
    let mut rows = cost_table(&manifests, view, args.force).map_err(|e| match e {
        CostError::MixedCorpusChecksums(_) => CliError::fatal(e),
        other => CliError::fatal(other),
    })?;
    if !args.no_published {
        rows.extend(published_rows());
    }
    print!("{}", render_cost_table(&rows));
    if let Some(out) = &args.out {
        let mut text = serde_json::to_string_pretty(&rows).expect("rows serialize");
        text.push('\n');
        write_text(out, &text)?;
        run.manifest.corpus_checksum = manifests[0].corpus_checksum.clone();
        run.manifest.items = rows.len() as u64;
        run.manifest.outputs.insert("rows".into(), file_digest(out)?);
        run.finish(settings, 0, &manifest_path(out, "cost"))?;
    }
    Ok(())
}

fn parse_grid(text: &str) -> CliResult<Vec<(usize, Variant)>> {
    let mut cells = Vec::new();
    for cell in text.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        let (k, variant) = cell
            .split_once(':')
            .ok_or_else(|| CliError::usage(format!("grid cell `{cell}` is not `k:variant`")))?;
        cells.push((parse_flag(k.trim(), "grid k")?, parse_flag(variant.trim(), "grid variant")?));
    }
    if cells.is_empty() {
        return Err(CliError::usage(PipelineError::EmptyGrid));
    }
    Ok(cells)
}

fn cmd_ablate(args: &AblateArgs, settings: &mut Settings) -> CliResult {
    let mut run = Run::start("ablate", args);
    let grid = parse_grid(&args.grid)?;
    let table = table_path(&args.report)?;
    let setup = provider_setup(&args.common, settings)?;
    let provider_id = settings.string("provider", args.common.provider.clone(), "mock");
    let agents = make_agents(&provider_id, &setup, settings)?;
    let backends = Backends::uniform(agents);
    let corpus = Corpus::load(&args.corpus).map_err(CliError::fatal)?;
    let index = load_or_build_index(&corpus, args.index.as_deref())?;
    let prompts = read_prompts(&args.prompts).map_err(CliError::fatal)?;
    let base = PipelineConfig {
        parallelism: setup.parallelism,
        seed: setup.seed,
        limits: setup.limits,
        failure_threshold: setup.failure_threshold,
        ..PipelineConfig::default()
    };
    let rows = run_ablation_grid(&prompts, &corpus, &index, &backends, &base, &MockJudge, &grid)
        .map_err(CliError::fatal)?;

    let mut ledger = LedgerTotals::default();
    let mut table_rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut failed = 0;
    for row in &rows {
        let label = format!("k={} {}", row.k, row.variant);
        match &row.outcome {
            Ok(cell) => {
                ledger.merge(&cell.ledger);
                table_rows.push(TableRow::from_report(&label, &cell.report));
                json_rows.push(json!({
                    "k": row.k,
                    "variant": row.variant,
                    "report": cell.report,
                    "optimizer": cell.ledger.accepted(Category::Optimizer),
                    "responder": cell.ledger.accepted(Category::Responder),
                    "failed_prompts": cell.failures,
                }));
            }
            Err(e) => {
                failed += 1;
                eprintln!("cell {label} failed: {e}");
                json_rows.push(json!({ "k": row.k, "variant": row.variant, "error": e }));
            }
        }
    }
    let mut text = serde_json::to_string_pretty(&json_rows).expect("rows serialize");
    text.push('\n');
    write_text(&args.report, &text)?;
    let rendered = render_table(&table_rows);
    write_text(&table, &rendered)?;
    print!("{rendered}");

    let m = &mut run.manifest;
    m.corpus_checksum = Some(corpus.checksum());
    m.provider_ids.insert("optimizer".into(), provider_id);
    m.items = (rows.len() - failed) as u64;
    m.failed_items = failed as u64;
    m.ledger = ledger;
    m.outputs.insert("report".into(), file_digest(&args.report)?);
    run.finish(settings, setup.seed, &manifest_path(&args.report, "ablate"))
}
