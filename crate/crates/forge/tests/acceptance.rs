//! Acceptance suite: ten criteria, one test each. Every test ends by
//! printing a single `criterion N (...): PASS` line; a failing criterion
//! panics before the line prints.

mod common;

use std::cell::RefCell;
use std::collections::{BTreeMap, VecDeque};
use std::time::Instant;

use benchforge::collector::{CollectionWindow, Collector, RawDocument};
use benchforge::llmio::{DeclineClient, RuleStubClient};
use benchforge::pipeline::{build_instances, BuildParams};
use benchforge::transport::FixtureTransport;
use benchforge_core::assemble::{self, InstanceFlags, Provenance, TestInstance};
use benchforge_core::bigram::CharBigram;
use benchforge_core::judge::{self, CandidateAnswer, GradedPair, GradedSingle, PairWinner, VerdictMode};
use benchforge_core::llm::{ChatClient, ChatRequest, LlmError, LogprobSequence};
use benchforge_core::ngram::{self, NgramIndex, OverlapPolicy};
use benchforge_core::passage::{length_gate, LengthVerdict, Passage};
use benchforge_core::probe::{self, PplVerdict};
use benchforge_core::redact::LEAK_CHUNK_WORDS;
use benchforge_core::types::{DocFormat, QueryType, SourceKind};
use benchforge_core::{rng, text};
use common::{bin, collect_and_build, fixture_dir, run_ok, setup_site};

fn pass(n: u32, what: &str, detail: String) {
    println!("criterion {n} ({what}): PASS: {detail}");
}

// ---------------------------------------------------------------------------
// 1. Redaction soundness

fn synthetic_docs(n: usize) -> Vec<RawDocument> {
    let subjects = [
        "lattice solver", "packet mirror", "token vault", "shadow index", "frame codec",
        "delta ledger", "query fabric", "pulse monitor", "stream anchor", "cache weaver",
    ];
    let domains = [
        "maritime logistics", "genome assembly", "traffic shaping", "ledger auditing",
        "image triage", "sensor fusion", "fleet routing", "archive curation",
    ];
    let mut docs = Vec::with_capacity(n);
    for i in 0..n {
        let subject = subjects[i % subjects.len()];
        let domain = domains[(i / subjects.len() + i) % domains.len()];
        let body = format!(
            "# workspace {i}\n\n\
             The {subject} is the component that schedules {domain} workloads in shard {i}. \
             Every {subject} in shard {i} shares one arbiter across all {domain} jobs, and the \
             {subject} retires work strictly in arrival order.\n\n\
             We aim to cut tail latency for {domain} tenants because arbiter queue depth in \
             shard {i} grows with fan-out. For example, run {i} cleared its {domain} backlog \
             nine minutes sooner than the unsharded baseline did. Future works will port the \
             {subject} onto streaming {domain} pipelines without the arbiter.\n",
        );
        docs.push(RawDocument {
            id: format!("syn{i:03}"),
            source: SourceKind::Preprint,
            url: format!("https://syn.test/{i}"),
            created_at: 1_688_169_600 + i as i64 * 3600,
            fetched_at: 1_688_860_800,
            title: format!("Scheduling note {i}"),
            description: format!("How the {subject} arbitrates {domain} work in shard {i}."),
            format: DocFormat::Markdown,
            payload: body.into_bytes(),
        });
    }
    docs
}

#[test]
fn criterion_1_redaction_soundness() {
    let start = Instant::now();
    let docs = synthetic_docs(80);
    let out = build_instances(&docs, &RuleStubClient, &BuildParams::default());
    assert!(
        out.instances.len() >= 200,
        "need >= 200 instances, got {}",
        out.instances.len()
    );

    let mut leaks = 0usize;
    for inst in &out.instances {
        let hay = text::normalize_match(&inst.passage_text);
        let answer_words = text::tokens(&inst.answer);
        let full = answer_words.join(" ");
        if !full.is_empty() && text::find_word_bounded(&hay, &full, 0).is_some() {
            leaks += 1;
            continue;
        }
        if answer_words.len() > LEAK_CHUNK_WORDS
            && answer_words
                .windows(LEAK_CHUNK_WORDS)
                .any(|w| text::find_word_bounded(&hay, &w.join(" "), 0).is_some())
        {
            leaks += 1;
        }
    }
    assert_eq!(leaks, 0, "leaky instances found");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10s");
    pass(
        1,
        "redaction soundness",
        format!("{} instances, 0 leaky, {:.2}s", out.instances.len(), elapsed.as_secs_f64()),
    );
}

// ---------------------------------------------------------------------------
// 2. Sampling apportionment

#[test]
fn criterion_2_sampling_apportionment() {
    let quotas = assemble::apportion(3000, &assemble::default_distribution());
    let expected: BTreeMap<QueryType, usize> = [
        (QueryType::Terminology, 1449),
        (QueryType::Summary, 837),
        (QueryType::Purpose, 443),
        (QueryType::Example, 148),
        (QueryType::Future, 123),
    ]
    .into_iter()
    .collect();
    assert_eq!(quotas, expected);
    pass(2, "sampling apportionment", "n=3000 -> (1449, 837, 443, 148, 123)".to_string());
}

// ---------------------------------------------------------------------------
// 3. Length rules

fn words(n: usize) -> String {
    (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
}

#[test]
fn criterion_3_length_rules() {
    let ok = Passage::from_text("a", "body", &words(1800));
    let over = Passage::from_text("b", "body", &words(1801));
    assert_eq!(length_gate(&ok, 1800), LengthVerdict::Accept);
    assert!(matches!(length_gate(&over, 1800), LengthVerdict::Reject { word_count: 1801, .. }));

    let mut t = FixtureTransport::new();
    t.record(
        "https://r.test/search",
        serde_json::json!({
            "items": [
                {"full_name": "a/short", "html_url": "https://r.test/a/short",
                 "created_at": "2023-07-03T00:00:00Z", "readme_url": "https://r.test/raw/short"},
                {"full_name": "a/exact", "html_url": "https://r.test/a/exact",
                 "created_at": "2023-07-03T00:00:00Z", "readme_url": "https://r.test/raw/exact"},
            ]
        })
        .to_string()
        .into_bytes(),
    );
    t.record("https://r.test/raw/short", words(99).into_bytes());
    t.record("https://r.test/raw/exact", words(100).into_bytes());
    let window = CollectionWindow::parse("2023-07-01..2023-07-08").unwrap();
    let mut c = Collector::new(&t, 1_688_860_800);
    let docs = c.fetch_repos("https://r.test/search", window, 100).unwrap();
    assert_eq!(docs.len(), 1);
    assert_eq!(docs[0].title, "a/exact");
    assert_eq!(c.stats.dropped_short_readme, 1);
    pass(3, "length rules", "1800 in / 1801 out; readme 99 out / 100 in".to_string());
}

// ---------------------------------------------------------------------------
// 4. Perplexity math

fn seq(logprobs: Vec<f64>) -> LogprobSequence {
    LogprobSequence {
        tokens: (0..logprobs.len()).map(|i| format!("t{i}")).collect(),
        logprobs,
        skipped_prefix: 1,
    }
}

#[test]
fn criterion_4_perplexity_math() {
    let half = (0.5f64).ln();
    let ppl = probe::perplexity(&seq(vec![0.0, half, half, half])).unwrap();
    assert_eq!(ppl, 2.0, "uniform ln(1/2) sequence must give exactly 2");

    let ppl = probe::perplexity(&seq(vec![0.0, -1.0, -2.0, -3.0])).unwrap();
    assert!((ppl - std::f64::consts::E.powi(2)).abs() < 1e-9);
    pass(4, "perplexity math", "PPL(ln 1/2 uniform)=2, PPL([-1,-2,-3])=e^2".to_string());
}

// ---------------------------------------------------------------------------
// 5. Oracle contamination separation

fn gibberish(seed: u64, texts: usize, words_per: usize) -> Vec<String> {
    let mut r = rng::seeded(seed);
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz".chars().collect();
    (0..texts)
        .map(|_| {
            (0..words_per)
                .map(|_| {
                    let len = 3 + rng::uniform_index(&mut r, 6);
                    (0..len)
                        .map(|_| alphabet[rng::uniform_index(&mut r, alphabet.len())])
                        .collect::<String>()
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

#[test]
fn criterion_5_oracle_contamination_separation() {
    let start = Instant::now();
    let mut separated = 0usize;
    let mut a_lower = 0usize;
    for trial in 0..100u64 {
        let corpus_a = gibberish(1_000 + trial, 8, 40);
        let corpus_b = gibberish(2_000 + trial, 8, 40);
        let oracle = CharBigram::train(&corpus_a.join("\n"), 0.1);
        let refs_a: Vec<&str> = corpus_a.iter().map(String::as_str).collect();
        let refs_b: Vec<&str> = corpus_b.iter().map(String::as_str).collect();
        let rep_a = probe::dataset_perplexity("a", &refs_a, &oracle, "oracle", 32).unwrap();
        let rep_b = probe::dataset_perplexity("b", &refs_b, &oracle, "oracle", 32).unwrap();
        if rep_a.mean_ppl < rep_b.mean_ppl {
            separated += 1;
        }
        if probe::compare(&rep_a, &rep_b, probe::DEFAULT_PPL_MARGIN).unwrap() == PplVerdict::ALower
        {
            a_lower += 1;
        }
    }
    assert!(separated >= 95, "separation in only {separated}/100 trials");
    assert!(a_lower >= 90, "a_lower verdict in only {a_lower}/100 trials");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget 30s");
    pass(
        5,
        "oracle contamination separation",
        format!("{separated}/100 separated, {a_lower}/100 a_lower, {:.2}s", elapsed.as_secs_f64()),
    );
}

// ---------------------------------------------------------------------------
// 6. Reconstruction probe

/// Replies with the exact continuation of a known text.
struct Memorizer {
    words: Vec<String>,
}

impl ChatClient for Memorizer {
    fn chat(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let prefix_len = req.prompt_text().split_whitespace().count();
        Ok(self.words[prefix_len.min(self.words.len())..].join(" "))
    }
}

#[test]
fn criterion_6_reconstruction_probe() {
    let passage = gibberish(42, 1, 120).remove(0);
    let memorizer = Memorizer { words: passage.split_whitespace().map(String::from).collect() };

    let r = probe::reconstruction_test(&memorizer, "mem", "i1", &passage, 0.5).unwrap();
    assert!(r.reference_suffix.split_whitespace().count() >= 50);
    assert_eq!(r.match_ratio, 1.0, "memorizer must reconstruct exactly");

    let r = probe::reconstruction_test(&DeclineClient, "fresh", "i1", &passage, 0.5).unwrap();
    assert!(r.match_ratio < 0.2, "non-memorizer scored {}", r.match_ratio);
    pass(6, "reconstruction probe", format!("memorizer 1.0, decliner {:.3}", r.match_ratio));
}

// ---------------------------------------------------------------------------
// 7. N-gram policies

#[test]
fn criterion_7_ngram_policies() {
    // Planted 13-gram is dirty under any-hit.
    let shared = "one two three four five six seven eight nine ten eleven twelve thirteen";
    let test_text = format!("lead in words then {shared} and trailing text");
    let train = format!("unrelated opening {shared} unrelated closing");
    let report =
        ngram::ngram_overlap(&[test_text.as_str()], &[train.as_str()], 13, OverlapPolicy::AnyHit);
    assert!(report.per_example[0].dirty);

    // 20-word example sharing its first 13 words: 6 of 13 8-grams hit,
    // which stays under the 0.7 fraction threshold.
    let base: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
    let test_text = base.join(" ");
    let train = base[..13].join(" ");
    let report = ngram::ngram_overlap(
        &[test_text.as_str()],
        &[train.as_str()],
        8,
        OverlapPolicy::FractionThreshold(0.7),
    );
    assert!((report.per_example[0].overlap_fraction - 6.0 / 13.0).abs() < 1e-12);
    assert!(!report.per_example[0].dirty);

    // Hashed index equals brute force on random small fixtures.
    let mut r = rng::seeded(99);
    for _ in 0..100 {
        let vocab: Vec<String> = (0..12).map(|i| format!("v{i}")).collect();
        let draw = |r: &mut _, len: usize| {
            (0..len)
                .map(|_| vocab[rng::uniform_index(r, vocab.len())].clone())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let test_len = 15 + rng::uniform_index(&mut r, 16);
        let test_text = draw(&mut r, test_len);
        let len_a = 15 + rng::uniform_index(&mut r, 16);
        let train_a = draw(&mut r, len_a);
        let len_b = 15 + rng::uniform_index(&mut r, 16);
        let train_b = draw(&mut r, len_b);
        let n = 2 + rng::uniform_index(&mut r, 3);

        let index = NgramIndex::build(&[train_a.as_str(), train_b.as_str()], n);
        let fast = index.overlap_fraction(&test_text);

        let grams = |s: &str| -> Vec<String> {
            let toks = text::tokens(s);
            toks.windows(n).map(|w| w.join(" ")).collect()
        };
        let train_grams: std::collections::BTreeSet<String> =
            grams(&train_a).into_iter().chain(grams(&train_b)).collect();
        let test_grams = grams(&test_text);
        let slow = if test_grams.is_empty() {
            0.0
        } else {
            test_grams.iter().filter(|g| train_grams.contains(*g)).count() as f64
                / test_grams.len() as f64
        };
        assert_eq!(fast, slow, "hashed vs brute force diverged");
    }
    pass(7, "n-gram policies", "any-hit, 6/13 fraction, 100 brute-force checks".to_string());
}

// ---------------------------------------------------------------------------
// 8. Judge aggregation

/// Replies with a scripted sequence of verdict strings.
struct SeqJudge {
    replies: RefCell<VecDeque<String>>,
}

impl SeqJudge {
    fn new(replies: &[&str]) -> SeqJudge {
        SeqJudge { replies: RefCell::new(replies.iter().map(|s| s.to_string()).collect()) }
    }
}

impl ChatClient for SeqJudge {
    fn chat(&self, _req: &ChatRequest) -> Result<String, LlmError> {
        self.replies
            .borrow_mut()
            .pop_front()
            .ok_or_else(|| LlmError::BadResponse("script exhausted".to_string()))
    }
}

fn instance() -> TestInstance {
    TestInstance {
        id: "acc-1".to_string(),
        source: SourceKind::News,
        query_type: QueryType::Summary,
        passage_text: "Placeholder passage for judging.".to_string(),
        query: "What happened?".to_string(),
        answer: "Something happened.".to_string(),
        provenance: Provenance {
            url: "https://x.test/1".to_string(),
            created_at: 0,
            pipeline_version: "0".to_string(),
            edits: Vec::new(),
        },
        flags: InstanceFlags { leak_checked: true },
    }
}

fn mark(w: PairWinner) -> &'static str {
    match w {
        PairWinner::A => "[[A]]",
        PairWinner::B => "[[B]]",
        PairWinner::Tie => "[[Tie]]",
    }
}

fn flip(w: PairWinner) -> PairWinner {
    match w {
        PairWinner::A => PairWinner::B,
        PairWinner::B => PairWinner::A,
        PairWinner::Tie => PairWinner::Tie,
    }
}

#[test]
fn criterion_8_judge_aggregation() {
    // Hand-computed matrix from a fixed verdict list.
    let pair = |a: &str, b: &str, w: PairWinner| GradedPair {
        instance_id: "i".to_string(),
        model_a: a.to_string(),
        model_b: b.to_string(),
        winner: w,
    };
    let pairs = vec![
        pair("m1", "m2", PairWinner::A),
        pair("m1", "m2", PairWinner::A),
        pair("m1", "m2", PairWinner::B),
        pair("m1", "m2", PairWinner::Tie),
        pair("m1", "m3", PairWinner::Tie),
        pair("m1", "m3", PairWinner::Tie),
        pair("m2", "m3", PairWinner::B),
    ];
    let singles = vec![
        GradedSingle {
            instance_id: "i".to_string(),
            query_type: QueryType::Summary,
            model_id: "m1".to_string(),
            score: 8,
        },
        GradedSingle {
            instance_id: "i".to_string(),
            query_type: QueryType::Summary,
            model_id: "m1".to_string(),
            score: 6,
        },
    ];
    let agg = judge::aggregate(&singles, &pairs);
    let m = &agg.matrix;
    assert_eq!(m.models, vec!["m1".to_string(), "m2".to_string(), "m3".to_string()]);
    let at = |a: &str, b: &str| {
        (m.index_of(a).unwrap(), m.index_of(b).unwrap())
    };
    let (i1, i2) = at("m1", "m2");
    assert_eq!(m.wins[i1][i2], 2);
    assert_eq!(m.wins[i2][i1], 1);
    assert_eq!(m.ties[i1][i2], 1);
    assert_eq!(m.totals[i1][i2], 4);
    let (i1, i3) = at("m1", "m3");
    assert_eq!(m.wins[i1][i3], 0);
    assert_eq!(m.ties[i1][i3], 2);
    let (i2, i3) = at("m2", "m3");
    assert_eq!(m.wins[i3][i2], 1);
    assert!(m.check_conservation());
    assert_eq!(agg.per_model_type["m1"][&QueryType::Summary].mean_score, 7.0);

    // Position-swap symmetry on randomized verdict fixtures.
    let inst = instance();
    let ans_a = CandidateAnswer {
        instance_id: inst.id.clone(),
        model_id: "ma".to_string(),
        text: "answer a".to_string(),
    };
    let ans_b = CandidateAnswer {
        instance_id: inst.id.clone(),
        model_id: "mb".to_string(),
        text: "answer b".to_string(),
    };
    let choices = [PairWinner::A, PairWinner::B, PairWinner::Tie];
    let mut r = rng::seeded(8);
    for _ in 0..1000 {
        let v1 = choices[rng::uniform_index(&mut r, 3)];
        let v2 = choices[rng::uniform_index(&mut r, 3)];

        let judge_fwd = SeqJudge::new(&[mark(v1), mark(v2)]);
        let verdict = judge::grade_pairwise(&judge_fwd, "j", &inst, &ans_a, &ans_b).unwrap();
        let VerdictMode::Pairwise { winner } = verdict.mode else { panic!("not pairwise") };

        let expected = if v1 == flip(v2) { v1 } else { PairWinner::Tie };
        assert_eq!(winner, expected, "swap-disagreement must yield Tie");

        // The same underlying judgments with candidates swapped must
        // produce the mirrored winner.
        let judge_rev = SeqJudge::new(&[mark(v2), mark(v1)]);
        let verdict = judge::grade_pairwise(&judge_rev, "j", &inst, &ans_b, &ans_a).unwrap();
        let VerdictMode::Pairwise { winner: mirrored } = verdict.mode else { panic!() };
        assert_eq!(mirrored, flip(winner));
    }
    pass(8, "judge aggregation", "hand matrix exact, 1000 swap fixtures".to_string());
}

// ---------------------------------------------------------------------------
// 9. End-to-end determinism

#[test]
fn criterion_9_end_to_end_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup_site(dir.path());
    collect_and_build(dir.path(), &config);

    let read = |name: &str| std::fs::read(dir.path().join("out").join(name)).unwrap();
    let names = ["dataset_full.jsonl", "dataset_sampled.jsonl", "manifest.json"];
    let first: Vec<Vec<u8>> = names.iter().map(|n| read(n)).collect();
    run_ok(bin().args(["--config", config.to_str().unwrap(), "build"]));
    let second: Vec<Vec<u8>> = names.iter().map(|n| read(n)).collect();
    assert_eq!(first, second, "rebuild changed bytes");
    pass(9, "end-to-end determinism", "two builds byte-identical (jsonl + manifest)".to_string());
}

// ---------------------------------------------------------------------------
// 10. Parser goldens

#[test]
fn criterion_10_parser_goldens() {
    let fx = fixture_dir();
    let golden = |name: &str| {
        std::fs::read_to_string(fx.parent().unwrap().join("golden").join(name)).unwrap()
    };
    let read = |rel: &str| std::fs::read_to_string(fx.join(rel)).unwrap();

    let p = benchforge_core::latex::latex_to_passage("g", &read("preprints/p01.tex")).unwrap();
    assert_eq!(format!("{}\n", p.text), golden("latex_p01.txt"));
    let p = benchforge_core::html::html_article_to_text("g", &read("news/a01.html")).unwrap();
    assert_eq!(format!("{}\n", p.text), golden("html_a01.txt"));
    let p = benchforge_core::markdown::markdown_to_text("g", &read("repos/readme_meshsync.md"));
    assert_eq!(format!("{}\n", p.text), golden("markdown_meshsync.txt"));
    pass(10, "parser goldens", "latex, html, markdown byte-for-byte".to_string());
}
