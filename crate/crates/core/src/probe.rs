//! Memorisation probes: dataset perplexity against a fresh-text
//! baseline, and prefix-reconstruction of benchmark passages.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::llm::{ChatClient, ChatRequest, LlmError, LogprobSequence, ScoreClient};
use crate::text;

/// Relative-mean margin below which two mean perplexities are treated as
/// indistinguishable.
pub const DEFAULT_PPL_MARGIN: f64 = 0.05;

/// Default number of tokens each example is truncated to before scoring.
pub const DEFAULT_CONTROL_LENGTH: usize = 256;

/// Smallest sensible control length.
pub const MIN_CONTROL_LENGTH: usize = 32;

/// Default prefix fraction for the reconstruction probe.
pub const DEFAULT_PREFIX_FRACTION: f64 = 0.5;

/// Reconstruction needs at least this many words of passage.
pub const MIN_RECONSTRUCTION_WORDS: usize = 40;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error("no scored tokens in sequence")]
    DegenerateSequence,
    #[error("all {0} examples were shorter than the control length")]
    AllSkipped(usize),
    #[error("reports disagree on model or control length: ({0}, {1}) vs ({2}, {3})")]
    MismatchedControls(String, usize, String, usize),
    #[error("control length {0} is below the minimum {MIN_CONTROL_LENGTH}")]
    ControlTooShort(usize),
    #[error("passage has {0} words, need at least {MIN_RECONSTRUCTION_WORDS}")]
    PassageTooShort(usize),
    #[error("prefix fraction {0} is outside (0, 1)")]
    BadPrefixFraction(f64),
    #[error("empty dataset")]
    EmptyDataset,
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// exp(-mean scored logprob) of a sequence.
pub fn perplexity(seq: &LogprobSequence) -> Result<f64, ProbeError> {
    let scored = seq.scored();
    if scored.is_empty() {
        return Err(ProbeError::DegenerateSequence);
    }
    let mean = scored.iter().sum::<f64>() / scored.len() as f64;
    Ok(libm::exp(-mean))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub dataset_name: String,
    pub model_id: String,
    /// Words kept per example before scoring. Every scored example is cut
    /// to exactly this many words; shorter examples are skipped.
    pub control_length: usize,
    pub per_example_ppl: Vec<f64>,
    pub mean_ppl: f64,
    pub examples_scored: usize,
    pub examples_skipped: usize,
    /// Leading tokens the backend left unscored, as reported per example
    /// (maximum across examples).
    pub skipped_prefix: usize,
}

/// Score every passage at a fixed control length and aggregate.
///
/// The "same length" control is applied in words: each passage is
/// truncated to exactly `control_length` words, and passages with fewer
/// words are skipped and counted.
pub fn dataset_perplexity(
    dataset_name: &str,
    passages: &[&str],
    client: &dyn ScoreClient,
    model_id: &str,
    control_length: usize,
) -> Result<PerplexityReport, ProbeError> {
    if passages.is_empty() {
        return Err(ProbeError::EmptyDataset);
    }
    if control_length < MIN_CONTROL_LENGTH {
        return Err(ProbeError::ControlTooShort(control_length));
    }
    let mut per_example_ppl = Vec::new();
    let mut skipped = 0usize;
    let mut max_prefix = 0usize;
    for &passage in passages {
        if text::word_count(passage) < control_length {
            skipped += 1;
            continue;
        }
        let truncated = text::first_words(passage, control_length);
        let seq = client.score_logprobs(model_id, &truncated)?;
        seq.validate()?;
        max_prefix = max_prefix.max(seq.skipped_prefix);
        per_example_ppl.push(perplexity(&seq)?);
    }
    if per_example_ppl.is_empty() {
        return Err(ProbeError::AllSkipped(skipped));
    }
    let mean_ppl = per_example_ppl.iter().sum::<f64>() / per_example_ppl.len() as f64;
    Ok(PerplexityReport {
        dataset_name: dataset_name.to_string(),
        model_id: model_id.to_string(),
        control_length,
        examples_scored: per_example_ppl.len(),
        examples_skipped: skipped,
        skipped_prefix: max_prefix,
        per_example_ppl,
        mean_ppl,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PplVerdict {
    ALower,
    BLower,
    /// Neither mean clears the margin; delta = mean_a - mean_b.
    Inconclusive { delta: f64 },
}

/// Compare two reports with a relative-mean margin: a is lower iff
/// mean_a < mean_b * (1 - margin), and symmetrically for b.
pub fn compare(
    a: &PerplexityReport,
    b: &PerplexityReport,
    margin: f64,
) -> Result<PplVerdict, ProbeError> {
    if a.model_id != b.model_id || a.control_length != b.control_length {
        return Err(ProbeError::MismatchedControls(
            a.model_id.clone(),
            a.control_length,
            b.model_id.clone(),
            b.control_length,
        ));
    }
    if a.mean_ppl < b.mean_ppl * (1.0 - margin) {
        Ok(PplVerdict::ALower)
    } else if b.mean_ppl < a.mean_ppl * (1.0 - margin) {
        Ok(PplVerdict::BLower)
    } else {
        Ok(PplVerdict::Inconclusive { delta: a.mean_ppl - b.mean_ppl })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub instance_id: String,
    pub prefix_fraction: f64,
    pub generated: String,
    pub reference_suffix: String,
    /// Longest common contiguous word run between `generated` and the
    /// reference suffix, divided by the suffix word count.
    pub match_ratio: f64,
}

/// Longest run of words (normalized) appearing contiguously in both
/// texts.
pub fn longest_common_word_run(a: &str, b: &str) -> usize {
    let xa = text::tokens(a);
    let xb = text::tokens(b);
    if xa.is_empty() || xb.is_empty() {
        return 0;
    }
    let mut best = 0usize;
    let mut prev = alloc::vec![0usize; xb.len() + 1];
    for wa in &xa {
        let mut cur = alloc::vec![0usize; xb.len() + 1];
        for (j, wb) in xb.iter().enumerate() {
            if wa == wb {
                cur[j + 1] = prev[j] + 1;
                best = best.max(cur[j + 1]);
            }
        }
        prev = cur;
    }
    best
}

/// Prompt the model with the leading `prefix_fraction` of the passage's
/// words (ceiling) and measure how much of the true suffix it reproduces
/// verbatim.
pub fn reconstruction_test(
    client: &dyn ChatClient,
    model_id: &str,
    instance_id: &str,
    passage_text: &str,
    prefix_fraction: f64,
) -> Result<ReconstructionResult, ProbeError> {
    if !(prefix_fraction > 0.0 && prefix_fraction < 1.0) {
        return Err(ProbeError::BadPrefixFraction(prefix_fraction));
    }
    let normalized = text::nfc(passage_text);
    let words: Vec<&str> = normalized.split_whitespace().collect();
    if words.len() < MIN_RECONSTRUCTION_WORDS {
        return Err(ProbeError::PassageTooShort(words.len()));
    }
    let cut = libm::ceil(prefix_fraction * words.len() as f64) as usize;
    let cut = cut.clamp(1, words.len() - 1);
    let prefix = words[..cut].join(" ");
    let reference_suffix = words[cut..].join(" ");

    let req = ChatRequest::new(model_id, prefix.clone()).with_max_tokens(512);
    let generated = client.chat(&req)?;

    let suffix_words = words.len() - cut;
    let run = longest_common_word_run(&generated, &reference_suffix);
    let match_ratio = (run as f64 / suffix_words as f64).clamp(0.0, 1.0);
    Ok(ReconstructionResult {
        instance_id: instance_id.to_string(),
        prefix_fraction,
        generated,
        reference_suffix,
        match_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn seq(logprobs: Vec<f64>, skipped: usize) -> LogprobSequence {
        LogprobSequence {
            tokens: logprobs.iter().map(|_| "t".to_string()).collect(),
            logprobs,
            skipped_prefix: skipped,
        }
    }

    #[test]
    fn perplexity_hand_values() {
        let ln_half = libm::log(0.5);
        assert!((perplexity(&seq(vec![ln_half; 4], 0)).unwrap() - 2.0).abs() < 1e-12);
        assert!((perplexity(&seq(vec![0.0; 3], 0)).unwrap() - 1.0).abs() < 1e-12);
        // Mean of [-1,-2,-3] is -2; PPL = e^2.
        let p = perplexity(&seq(vec![-1.0, -2.0, -3.0], 0)).unwrap();
        assert!((p - libm::exp(2.0)).abs() < 1e-9);
    }

    #[test]
    fn perplexity_skips_prefix_and_rejects_degenerate() {
        // Skipped token's placeholder value must not affect the mean.
        let s = seq(vec![-99.0, libm::log(0.5), libm::log(0.5)], 1);
        assert!((perplexity(&s).unwrap() - 2.0).abs() < 1e-12);
        let empty = LogprobSequence { tokens: vec!["a".into()], logprobs: vec![0.0], skipped_prefix: 1 };
        assert_eq!(perplexity(&empty), Err(ProbeError::DegenerateSequence));
    }

    #[test]
    fn perplexity_monotone_in_single_logprob() {
        let base = perplexity(&seq(vec![-1.0, -1.0, -1.0], 0)).unwrap();
        let raised = perplexity(&seq(vec![-1.0, -0.5, -1.0], 0)).unwrap();
        assert!(raised < base);
        assert!(raised >= 1.0);
    }

    struct Uniform(f64);

    impl ScoreClient for Uniform {
        fn score_logprobs(&self, _m: &str, text: &str) -> Result<LogprobSequence, LlmError> {
            let n = text.split_whitespace().count().max(1);
            let mut lp = vec![self.0; n];
            lp[0] = 0.0;
            Ok(LogprobSequence {
                tokens: (0..n).map(|i| alloc::format!("w{i}")).collect(),
                logprobs: lp,
                skipped_prefix: 1,
            })
        }
    }

    fn long_text(word: &str, n: usize) -> String {
        vec![word; n].join(" ")
    }

    #[test]
    fn dataset_perplexity_truncates_and_skips() {
        let long = long_text("alpha", 40);
        let short = long_text("beta", 10);
        let texts = [long.as_str(), short.as_str()];
        let client = Uniform(libm::log(0.5));
        let report = dataset_perplexity("d", &texts, &client, "m", 32).unwrap();
        assert_eq!(report.examples_scored, 1);
        assert_eq!(report.examples_skipped, 1);
        assert_eq!(report.control_length, 32);
        assert!((report.mean_ppl - 2.0).abs() < 1e-12);
        assert_eq!(report.skipped_prefix, 1);
    }

    #[test]
    fn dataset_perplexity_all_skipped_and_bounds() {
        let short = long_text("x", 5);
        let texts = [short.as_str()];
        let client = Uniform(-1.0);
        assert!(matches!(
            dataset_perplexity("d", &texts, &client, "m", 32),
            Err(ProbeError::AllSkipped(1))
        ));
        assert!(matches!(
            dataset_perplexity("d", &texts, &client, "m", 8),
            Err(ProbeError::ControlTooShort(8))
        ));
        assert!(matches!(
            dataset_perplexity("d", &[], &client, "m", 32),
            Err(ProbeError::EmptyDataset)
        ));
    }

    fn report(mean: f64, model: &str, control: usize) -> PerplexityReport {
        PerplexityReport {
            dataset_name: "d".into(),
            model_id: model.into(),
            control_length: control,
            per_example_ppl: vec![mean],
            mean_ppl: mean,
            examples_scored: 1,
            examples_skipped: 0,
            skipped_prefix: 1,
        }
    }

    #[test]
    fn compare_margin_hand_checked() {
        let m = DEFAULT_PPL_MARGIN;
        assert_eq!(compare(&report(10.0, "m", 64), &report(20.0, "m", 64), m).unwrap(), PplVerdict::ALower);
        assert_eq!(compare(&report(20.0, "m", 64), &report(10.0, "m", 64), m).unwrap(), PplVerdict::BLower);
        // 10 vs 10.3: 10 >= 10.3 * 0.95 = 9.785, so inconclusive.
        match compare(&report(10.0, "m", 64), &report(10.3, "m", 64), m).unwrap() {
            PplVerdict::Inconclusive { delta } => assert!((delta + 0.3).abs() < 1e-12),
            other => panic!("expected inconclusive, got {other:?}"),
        }
        assert!(matches!(
            compare(&report(10.0, "m", 64), &report(10.0, "m", 128), m),
            Err(ProbeError::MismatchedControls(..))
        ));
        assert!(matches!(
            compare(&report(10.0, "m", 64), &report(10.0, "other", 64), m),
            Err(ProbeError::MismatchedControls(..))
        ));
    }

    #[test]
    fn oracle_separation_on_bigram_model() {
        use crate::bigram::CharBigram;
        let corpus_a = long_text("the cat sat on the mat and then", 8);
        let corpus_b = long_text("zyx wvu tsr qpo nml kji hgf edc", 8);
        let model = CharBigram::train(&corpus_a, 0.1);
        let ta = [corpus_a.as_str()];
        let tb = [corpus_b.as_str()];
        let ra = dataset_perplexity("a", &ta, &model, "oracle", 32).unwrap();
        let rb = dataset_perplexity("b", &tb, &model, "oracle", 32).unwrap();
        assert!(ra.mean_ppl < rb.mean_ppl);
        assert_eq!(compare(&ra, &rb, DEFAULT_PPL_MARGIN).unwrap(), PplVerdict::ALower);
    }

    #[test]
    fn common_run_hand_cases() {
        assert_eq!(longest_common_word_run("a b c d", "x a b c y"), 3);
        assert_eq!(longest_common_word_run("a b", "c d"), 0);
        assert_eq!(longest_common_word_run("", "a"), 0);
        // Normalization: case and punctuation do not break runs.
        assert_eq!(longest_common_word_run("Hello, world now", "hello world later"), 2);
    }

    struct Echo(String);

    impl ChatClient for Echo {
        fn chat(&self, _req: &ChatRequest) -> Result<String, LlmError> {
            Ok(self.0.clone())
        }
    }

    fn passage(n: usize) -> String {
        (0..n).map(|i| alloc::format!("word{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn memorizing_stub_scores_one() {
        let p = passage(60);
        let words: Vec<&str> = p.split_whitespace().collect();
        let suffix = words[30..].join(" ");
        let client = Echo(suffix);
        let r = reconstruction_test(&client, "m", "i1", &p, 0.5).unwrap();
        assert!((r.match_ratio - 1.0).abs() < 1e-12);
        assert_eq!(r.reference_suffix, words[30..].join(" "));
    }

    #[test]
    fn unrelated_stub_scores_near_zero() {
        let p = passage(60);
        let client = Echo("totally different text with nothing shared".into());
        let r = reconstruction_test(&client, "m", "i1", &p, 0.5).unwrap();
        assert!(r.match_ratio <= 1.0 / 30.0);
    }

    #[test]
    fn reconstruction_preconditions() {
        let p = passage(60);
        let client = Echo(String::new());
        assert!(matches!(
            reconstruction_test(&client, "m", "i", &passage(20), 0.5),
            Err(ProbeError::PassageTooShort(20))
        ));
        assert!(matches!(
            reconstruction_test(&client, "m", "i", &p, 1.0),
            Err(ProbeError::BadPrefixFraction(_))
        ));
        assert!(matches!(
            reconstruction_test(&client, "m", "i", &p, 0.0),
            Err(ProbeError::BadPrefixFraction(_))
        ));
    }

    #[test]
    fn prefix_is_ceiling_of_fraction() {
        // 41 words at 0.5 -> ceil(20.5) = 21-word prefix, 20-word suffix.
        let p = passage(41);
        let client = Echo(String::new());
        let r = reconstruction_test(&client, "m", "i", &p, 0.5).unwrap();
        assert_eq!(r.reference_suffix.split_whitespace().count(), 20);
    }
}
