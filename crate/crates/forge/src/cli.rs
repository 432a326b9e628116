//! Command-line surface: collect, build, probe, eval, report.

use std::path::{Path, PathBuf};

use benchforge_core::assemble::{self, SampleError};
use benchforge_core::bigram::CharBigram;
use benchforge_core::llm::ChatClient;
use benchforge_core::ngram::{self, OverlapPolicy};
use benchforge_core::probe::{self, ProbeError};
use benchforge_core::types::SourceKind;
use clap::{Args, Parser, Subcommand};

use crate::collector::{cache_load, cache_store, CollectError, CollectionWindow, Collector};
use crate::config::RunConfig;
use crate::eval::{models_without_answers, run_eval, DEFAULT_PAIR_BUDGET};
use crate::llmio::{CachedChat, DeclineClient, EchoClient, HttpLlm, RuleStubClient};
use crate::pipeline::{build_instances, BuildParams};
use crate::store;
use crate::transport::{FileTransport, HttpTransport, Transport};

/// Unix-seconds override for the collector clock; fixture runs set this
/// for reproducible fetched_at stamps.
pub const NOW_ENV: &str = "FORGE_NOW_UNIX";

#[derive(Parser, Debug)]
#[command(name = "benchforge", version, about = "Build and probe contamination-free reading-comprehension benchmarks")]
pub struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the configured cache directory.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fetch documents from the configured sources into the raw cache.
    Collect {
        /// Collection window, YYYY-MM-DD..YYYY-MM-DD.
        #[arg(long)]
        window: Option<String>,
        /// Per-source fetch cap for the preprint listing.
        #[arg(long, default_value_t = 500)]
        max: usize,
    },
    /// Turn the raw cache into full and sampled datasets.
    Build {
        /// Sample size override.
        #[arg(long)]
        n: Option<usize>,
        /// Chat model for extraction, query generation, and redaction.
        #[arg(long, default_value = "stub")]
        model: String,
    },
    /// Contamination and memorisation probes.
    Probe {
        #[command(subcommand)]
        probe: ProbeCmd,
    },
    /// Answer and grade the benchmark with candidate models and a judge.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated candidate model names.
        #[arg(long, value_delimiter = ',', required = true)]
        models: Vec<String>,
        #[arg(long, default_value = "stub")]
        judge: String,
        /// Pairwise judgment budget.
        #[arg(long, default_value_t = DEFAULT_PAIR_BUDGET)]
        pairs: usize,
        /// Evaluate only the first N instances.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Print the statistics table of a dataset file.
    Report {
        #[arg(long)]
        dataset: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum ProbeCmd {
    /// Compare dataset perplexity against a fresh-text baseline.
    Ppl(PplArgs),
    /// Prefix-reconstruction memorisation test.
    Reconstruct(ReconstructArgs),
    /// N-gram overlap between a dataset and a training corpus.
    Ngram(NgramArgs),
}

#[derive(Args, Debug)]
pub struct PplArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub baseline: PathBuf,
    /// "oracle" trains a char-bigram model on the dataset passages;
    /// other names resolve through the config.
    #[arg(long, default_value = "oracle")]
    pub model: String,
    #[arg(long, default_value_t = probe::DEFAULT_CONTROL_LENGTH)]
    pub control_length: usize,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "parrot")]
    pub model: String,
    #[arg(long, default_value_t = probe::DEFAULT_PREFIX_FRACTION)]
    pub prefix: f64,
    #[arg(long, default_value_t = 16)]
    pub limit: usize,
}

#[derive(Args, Debug)]
pub struct NgramArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Training corpus: a .jsonl dataset or a plain-text file.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, default_value_t = ngram::ANY_HIT_N)]
    pub n: usize,
    /// "any" or "fraction".
    #[arg(long, default_value = "any")]
    pub policy: String,
    #[arg(long, default_value_t = ngram::FRACTION_THRESHOLD)]
    pub threshold: f64,
}

/// Failure with the process exit code it maps to: 1 empty result,
/// 2 missing input, 3 transport or model failure.
#[derive(Debug)]
pub struct ExitError {
    pub code: i32,
    pub message: String,
}

impl ExitError {
    fn empty(message: impl Into<String>) -> ExitError {
        ExitError { code: 1, message: message.into() }
    }

    fn missing(message: impl Into<String>) -> ExitError {
        ExitError { code: 2, message: message.into() }
    }

    fn failure(message: impl Into<String>) -> ExitError {
        ExitError { code: 3, message: message.into() }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, ExitError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| ExitError::missing(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.cache_dir {
        cfg.cache_dir = dir.clone();
    }
    if let Some(dir) = &cli.out {
        cfg.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn now_unix() -> i64 {
    std::env::var(NOW_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| chrono::Utc::now().timestamp())
}

fn transport_for(url: &str) -> Result<Box<dyn Transport>, ExitError> {
    if url.starts_with("file://") {
        Ok(Box::new(FileTransport::new()))
    } else {
        HttpTransport::new()
            .map(|t| Box::new(t) as Box<dyn Transport>)
            .map_err(|e| ExitError::failure(e.to_string()))
    }
}

fn chat_client(name: &str, cfg: &RunConfig) -> Result<Box<dyn ChatClient>, ExitError> {
    match name {
        "stub" => Ok(Box::new(RuleStubClient)),
        "parrot" => Ok(Box::new(EchoClient)),
        "decline" => Ok(Box::new(DeclineClient)),
        other => {
            let ep = cfg
                .models
                .get(other)
                .ok_or_else(|| ExitError::missing(format!("model {other:?} not in config")))?;
            let http = HttpLlm::new(&ep.base_url, ep.api_key_env.as_deref())
                .map_err(|e| ExitError::failure(e.to_string()))?;
            Ok(Box::new(CachedChat::new(Box::new(http), Some(cfg.cache_dir.join("llm")))))
        }
    }
}

fn read_dataset(path: &Path) -> Result<Vec<benchforge_core::assemble::TestInstance>, ExitError> {
    if !path.exists() {
        return Err(ExitError::missing(format!("dataset not found: {}", path.display())));
    }
    store::read_jsonl(path).map_err(|e| ExitError::missing(e.to_string()))
}

pub fn run(cli: &Cli) -> Result<(), ExitError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Collect { window, max } => cmd_collect(&cfg, window.as_deref(), *max),
        Command::Build { n, model } => cmd_build(&cfg, *n, model),
        Command::Probe { probe } => match probe {
            ProbeCmd::Ppl(args) => cmd_probe_ppl(&cfg, args),
            ProbeCmd::Reconstruct(args) => cmd_probe_reconstruct(&cfg, args),
            ProbeCmd::Ngram(args) => cmd_probe_ngram(&cfg, args),
        },
        Command::Eval { dataset, models, judge, pairs, limit } => {
            cmd_eval(&cfg, dataset, models, judge, *pairs, *limit)
        }
        Command::Report { dataset } => cmd_report(dataset),
    }
}

fn cmd_collect(cfg: &RunConfig, window_flag: Option<&str>, max: usize) -> Result<(), ExitError> {
    let window_spec = window_flag.unwrap_or(&cfg.window);
    let window =
        CollectionWindow::parse(window_spec).map_err(|e| ExitError::missing(e.to_string()))?;
    let raw_dir = cfg.cache_dir.join("raw");
    let now = now_unix();

    let mut total = 0usize;
    for &source in &cfg.sources {
        let endpoint = match source {
            SourceKind::Preprint => &cfg.endpoints.preprint_listing,
            SourceKind::News => &cfg.endpoints.news_front_page,
            SourceKind::CodeRepo => &cfg.endpoints.repo_search,
        };
        if endpoint.is_empty() {
            println!("{}: no endpoint configured, skipped", source.as_str());
            continue;
        }
        let transport = transport_for(endpoint)?;
        let mut collector = Collector::new(transport.as_ref(), now);
        let fetched = match source {
            SourceKind::Preprint => collector.fetch_preprints(endpoint, window, max),
            SourceKind::News => collector.fetch_news(endpoint),
            SourceKind::CodeRepo => {
                collector.fetch_repos(endpoint, window, cfg.min_readme_words)
            }
        };
        let docs = match fetched {
            Ok(docs) => docs,
            Err(CollectError::NoArticlesFound) => {
                println!("{}: no article links found", source.as_str());
                continue;
            }
            Err(e) => return Err(ExitError::failure(e.to_string())),
        };
        let mut added = 0usize;
        for doc in &docs {
            if cache_store(&raw_dir, doc).map_err(|e| ExitError::failure(e.to_string()))? {
                added += 1;
            }
        }
        println!("{}: {} documents ({} new)", source.as_str(), docs.len(), added);
        total += docs.len();
    }
    if total == 0 {
        return Err(ExitError::empty("no documents collected from any source"));
    }
    Ok(())
}

fn cmd_build(cfg: &RunConfig, n_flag: Option<usize>, model: &str) -> Result<(), ExitError> {
    let raw_dir = cfg.cache_dir.join("raw");
    if !raw_dir.is_dir() {
        return Err(ExitError::missing(format!("raw cache not found: {}", raw_dir.display())));
    }
    let docs = cache_load(&raw_dir).map_err(|e| ExitError::missing(e.to_string()))?;
    if docs.is_empty() {
        return Err(ExitError::missing("raw cache is empty; run collect first"));
    }
    let window =
        CollectionWindow::parse(&cfg.window).map_err(|e| ExitError::missing(e.to_string()))?;
    let llm = chat_client(model, cfg)?;
    let params = BuildParams {
        max_words: cfg.max_words,
        seed: cfg.seed,
        ..BuildParams::default()
    };
    let output = build_instances(&docs, llm.as_ref(), &params);
    if output.instances.is_empty() {
        return Err(ExitError::empty("pipeline produced zero instances"));
    }

    let sample_n = n_flag.unwrap_or(cfg.sample_n);
    let dist = assemble::default_distribution();
    let sampled = match assemble::sample(&output.instances, sample_n, &dist, cfg.seed) {
        Ok(s) => s,
        Err(SampleError::ShortSupply { query_type, needed, available }) => {
            println!(
                "warning: short supply for {query_type} ({available} of {needed}); \
                 sampled file mirrors the full dataset"
            );
            output.instances.clone()
        }
    };

    let stats_full = assemble::stats(&output.instances);
    let manifest = store::Manifest {
        window,
        seed: cfg.seed,
        pipeline_version: params.pipeline_version.clone(),
        dataset_version: assemble::version_string(window.start),
        documents_in: output.documents_in,
        passages_kept: output.passages_kept,
        instances_full: output.instances.len(),
        instances_sampled: sampled.len(),
        drops: output.drops.clone(),
    };

    let out = &cfg.out_dir;
    let write = |r: anyhow::Result<()>| r.map_err(|e| ExitError::failure(e.to_string()));
    write(store::write_jsonl(&out.join("dataset_full.jsonl"), &output.instances))?;
    write(store::write_jsonl(&out.join("dataset_sampled.jsonl"), &sampled))?;
    write(store::write_json(&out.join("stats.json"), &stats_full))?;
    write(store::write_json(&out.join("manifest.json"), &manifest))?;

    println!(
        "built {} instances ({} sampled) from {} documents",
        output.instances.len(),
        sampled.len(),
        output.documents_in
    );
    println!(
        "drops: parse_failed={} over_length={} unfaithful={} leaky={} query_failed={}",
        output.drops.parse_failed,
        output.drops.over_length,
        output.drops.unfaithful,
        output.drops.leaky,
        output.drops.query_failed
    );
    print!("{}", store::render_stats(&stats_full));
    Ok(())
}

fn passages_of(path: &Path) -> Result<Vec<String>, ExitError> {
    Ok(read_dataset(path)?.into_iter().map(|i| i.passage_text).collect())
}

fn cmd_probe_ppl(cfg: &RunConfig, args: &PplArgs) -> Result<(), ExitError> {
    let dataset = passages_of(&args.dataset)?;
    let baseline = passages_of(&args.baseline)?;

    let oracle;
    let http;
    let score: &dyn benchforge_core::llm::ScoreClient = if args.model == "oracle" {
        // Contaminated-by-construction: the oracle trains on the dataset
        // under test, so the dataset should come out lower.
        oracle = CharBigram::train(&dataset.join("\n"), 0.1);
        &oracle
    } else {
        let ep = cfg
            .models
            .get(&args.model)
            .ok_or_else(|| ExitError::missing(format!("model {:?} not in config", args.model)))?;
        http = HttpLlm::new(&ep.base_url, ep.api_key_env.as_deref())
            .map_err(|e| ExitError::failure(e.to_string()))?;
        &http
    };

    let run = |name: &str, texts: &[String]| {
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        probe::dataset_perplexity(name, &refs, score, &args.model, args.control_length)
    };
    let map_err = |e: ProbeError| match e {
        ProbeError::AllSkipped(_) | ProbeError::EmptyDataset => ExitError::empty(e.to_string()),
        ProbeError::Llm(_) => ExitError::failure(e.to_string()),
        other => ExitError::missing(other.to_string()),
    };
    let report_a = run("dataset", &dataset).map_err(map_err)?;
    let report_b = run("baseline", &baseline).map_err(map_err)?;
    let verdict = probe::compare(&report_a, &report_b, probe::DEFAULT_PPL_MARGIN)
        .map_err(|e| ExitError::missing(e.to_string()))?;

    println!(
        "dataset mean ppl {:.4} ({} scored, {} skipped)",
        report_a.mean_ppl, report_a.examples_scored, report_a.examples_skipped
    );
    println!(
        "baseline mean ppl {:.4} ({} scored, {} skipped)",
        report_b.mean_ppl, report_b.examples_scored, report_b.examples_skipped
    );
    println!("verdict: {verdict:?}");

    let out = &cfg.out_dir;
    store::write_ppl_csv(&out.join("ppl.csv"), &[&report_a, &report_b])
        .map_err(|e| ExitError::failure(e.to_string()))?;
    store::write_json(&out.join("ppl.json"), &serde_json::json!({
        "dataset": report_a,
        "baseline": report_b,
        "verdict": verdict,
    }))
    .map_err(|e| ExitError::failure(e.to_string()))?;
    Ok(())
}

fn cmd_probe_reconstruct(cfg: &RunConfig, args: &ReconstructArgs) -> Result<(), ExitError> {
    let dataset = read_dataset(&args.dataset)?;
    let client = chat_client(&args.model, cfg)?;
    let mut results = Vec::new();
    let mut too_short = 0usize;
    for inst in dataset.iter().take(args.limit) {
        match probe::reconstruction_test(
            client.as_ref(),
            &args.model,
            &inst.id,
            &inst.passage_text,
            args.prefix,
        ) {
            Ok(r) => results.push(r),
            Err(ProbeError::PassageTooShort(_)) => too_short += 1,
            Err(ProbeError::Llm(e)) => return Err(ExitError::failure(e.to_string())),
            Err(e) => return Err(ExitError::missing(e.to_string())),
        }
    }
    if results.is_empty() {
        return Err(ExitError::empty(format!(
            "no passages long enough to probe ({too_short} too short)"
        )));
    }
    let mean: f64 = results.iter().map(|r| r.match_ratio).sum::<f64>() / results.len() as f64;
    println!(
        "reconstruction: {} probed, {} too short, mean match ratio {:.4} (prefix {})",
        results.len(),
        too_short,
        mean,
        args.prefix
    );
    store::write_json(&cfg.out_dir.join("reconstruct.json"), &results)
        .map_err(|e| ExitError::failure(e.to_string()))?;
    Ok(())
}

fn cmd_probe_ngram(cfg: &RunConfig, args: &NgramArgs) -> Result<(), ExitError> {
    let tests = passages_of(&args.dataset)?;
    if !args.train.exists() {
        return Err(ExitError::missing(format!("train corpus not found: {}", args.train.display())));
    }
    let train: Vec<String> =
        if args.train.extension().is_some_and(|e| e == "jsonl") {
            passages_of(&args.train)?
        } else {
            vec![std::fs::read_to_string(&args.train)
                .map_err(|e| ExitError::missing(e.to_string()))?]
        };
    let policy = match args.policy.as_str() {
        "any" => OverlapPolicy::AnyHit,
        "fraction" => OverlapPolicy::FractionThreshold(args.threshold),
        other => return Err(ExitError::missing(format!("unknown policy {other:?}"))),
    };
    let test_refs: Vec<&str> = tests.iter().map(String::as_str).collect();
    let train_refs: Vec<&str> = train.iter().map(String::as_str).collect();
    let report = ngram::ngram_overlap(&test_refs, &train_refs, args.n, policy);
    println!(
        "ngram overlap (n={}, policy={}): {} of {} examples dirty",
        args.n,
        args.policy,
        report.dirty_count(),
        report.per_example.len()
    );
    store::write_json(&cfg.out_dir.join("ngram.json"), &report)
        .map_err(|e| ExitError::failure(e.to_string()))?;
    Ok(())
}

fn cmd_eval(
    cfg: &RunConfig,
    dataset_path: &Path,
    model_names: &[String],
    judge_name: &str,
    pair_budget: usize,
    limit: Option<usize>,
) -> Result<(), ExitError> {
    let mut dataset = read_dataset(dataset_path)?;
    if let Some(limit) = limit {
        dataset.truncate(limit);
    }
    if dataset.is_empty() {
        return Err(ExitError::empty("dataset is empty"));
    }
    let mut models: Vec<(String, Box<dyn ChatClient>)> = Vec::new();
    for name in model_names {
        models.push((name.clone(), chat_client(name, cfg)?));
    }
    let judge_client = chat_client(judge_name, cfg)?;

    let outcome = run_eval(&dataset, &models, judge_name, judge_client.as_ref(), pair_budget, cfg.seed);

    let silent = models_without_answers(&outcome.counts);
    let out = &cfg.out_dir;
    store::write_scores_csv(&out.join("scores.csv"), &outcome.aggregate)
        .map_err(|e| ExitError::failure(e.to_string()))?;
    store::write_winrate_csv(&out.join("winrate.csv"), &outcome.aggregate.matrix)
        .map_err(|e| ExitError::failure(e.to_string()))?;
    store::write_json(&out.join("eval.json"), &serde_json::json!({
        "counts": outcome.counts,
        "singles": outcome.singles,
        "pairs": outcome.pairs,
    }))
    .map_err(|e| ExitError::failure(e.to_string()))?;

    for (model, by_type) in &outcome.aggregate.per_model_type {
        let mut parts: Vec<String> = Vec::new();
        for (qt, s) in by_type {
            parts.push(format!("{}={:.2} (n={})", qt.as_str(), s.mean_score, s.n));
        }
        println!("{model}: {}", parts.join("  "));
    }
    let m = &outcome.aggregate.matrix;
    for i in 0..m.models.len() {
        for j in (i + 1)..m.models.len() {
            println!(
                "{} vs {}: {}-{} ({} ties)",
                m.models[i], m.models[j], m.wins[i][j], m.wins[j][i], m.ties[i][j]
            );
        }
    }
    if !silent.is_empty() {
        return Err(ExitError::empty(format!("models produced zero answers: {}", silent.join(", "))));
    }
    Ok(())
}

fn cmd_report(dataset_path: &Path) -> Result<(), ExitError> {
    let dataset = read_dataset(dataset_path)?;
    let table = assemble::stats(&dataset);
    print!("{}", store::render_stats(&table));
    let leak_checked = dataset.iter().filter(|i| i.flags.leak_checked).count();
    println!("leak_checked: {leak_checked}/{}", dataset.len());
    Ok(())
}
