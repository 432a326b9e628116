//! Key-information extraction: the five answer types, cue scanning,
//! keyphrase ranking, and the faithfulness gate.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::llm::{ChatClient, ChatRequest, LlmError};
use crate::passage::Passage;
use crate::text;
use crate::types::{QueryType, SourceKind};

/// Passages longer than this (in words) go to the LLM key-term prompt
/// instead of the statistical ranker; stands in for a 512-subword budget.
pub const STATISTICAL_RANKER_MAX_WORDS: usize = 384;

/// Default content-word overlap required of extracted answers.
pub const DEFAULT_FAITHFULNESS_THRESHOLD: f64 = 0.7;

/// How many term-bearing sentences feed definition extraction.
pub const DEFINITION_CONTEXT_SENTENCES: usize = 3;

/// How the answer text was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractMethod {
    TemplateMatch,
    CueMatch,
    LlmExtract,
}

/// Extracted key information with its anchor sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub passage_id: String,
    pub query_type: QueryType,
    pub answer_text: String,
    /// Indices into the passage's sentence list. May be empty only for
    /// summaries sourced from document metadata (title, description,
    /// abstract), whose text does not live in the passage.
    pub anchor_sentences: Vec<usize>,
    pub term: Option<String>,
    pub method: ExtractMethod,
    #[serde(default)]
    pub from_metadata: bool,
}

impl AnswerSpan {
    /// Concatenated anchor sentence text.
    pub fn anchor_text(&self, passage: &Passage) -> String {
        let mut s = String::new();
        for &idx in &self.anchor_sentences {
            if let Some(t) = passage.sentence_text(idx) {
                if !s.is_empty() {
                    s.push(' ');
                }
                s.push_str(t);
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("extracted answer failed the faithfulness gate (overlap {overlap:.3})")]
    FaithfulnessViolation { overlap: f64 },
}

// ---------------------------------------------------------------------------
// Cue sets

/// Cue phrases for one query type. `..` inside a phrase is a wildcard:
/// both parts must occur in order within the same sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueSet {
    pub query_type: QueryType,
    pub phrases: Vec<String>,
}

impl CueSet {
    pub fn new(query_type: QueryType, phrases: &[&str]) -> CueSet {
        CueSet { query_type, phrases: phrases.iter().map(|p| p.to_string()).collect() }
    }

    /// The published cue lists for purpose, example, and future queries.
    pub fn default_for(query_type: QueryType) -> CueSet {
        match query_type {
            QueryType::Purpose => CueSet::new(
                QueryType::Purpose,
                &["because", "aim to", "allow .. to", "contribute to", "lead to", "motivation"],
            ),
            QueryType::Example => {
                CueSet::new(QueryType::Example, &["for example", "e.g.,", "such as"])
            }
            QueryType::Future => CueSet::new(
                QueryType::Future,
                &["future works", "forecasts show", "upcoming features"],
            ),
            other => CueSet { query_type: other, phrases: Vec::new() },
        }
    }

    pub fn matches(&self, sentence: &str) -> bool {
        self.phrases.iter().any(|p| cue_phrase_matches(sentence, p))
    }
}

/// Case-insensitive word-boundary match of one cue phrase, honoring the
/// `..` in-order wildcard.
pub fn cue_phrase_matches(sentence: &str, phrase: &str) -> bool {
    let lower = sentence.to_lowercase();
    let mut from = 0usize;
    for part in phrase.split("..") {
        let part = part.trim().to_lowercase();
        if part.is_empty() {
            continue;
        }
        match find_bounded(&lower, &part, from) {
            Some(at) => from = at + part.len(),
            None => return false,
        }
    }
    true
}

use crate::text::find_word_bounded as find_bounded;

// ---------------------------------------------------------------------------
// Faithfulness gate

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateVerdict {
    Pass { overlap: f64 },
    Fail { overlap: f64 },
}

impl GateVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, GateVerdict::Pass { .. })
    }
}

/// Fraction of the answer's content-word tokens that also occur in the
/// anchor text. An answer with no content words is vacuously grounded.
pub fn answer_overlap(answer_text: &str, anchor_text: &str) -> f64 {
    let answer_tokens = text::content_tokens(answer_text);
    if answer_tokens.is_empty() {
        return 1.0;
    }
    let anchor: BTreeSet<String> = text::tokens(anchor_text).into_iter().collect();
    let covered = answer_tokens.iter().filter(|t| anchor.contains(*t)).count();
    covered as f64 / answer_tokens.len() as f64
}

/// Pass iff the span's content-word overlap with its anchors reaches the
/// threshold. Metadata-sourced spans are gated against the whole
/// document metadata by the caller, not here.
pub fn faithfulness_gate(span: &AnswerSpan, passage: &Passage, threshold: f64) -> GateVerdict {
    debug_assert!(threshold > 0.0 && threshold <= 1.0);
    let anchor = span.anchor_text(passage);
    let overlap = answer_overlap(&span.answer_text, &anchor);
    if overlap >= threshold {
        GateVerdict::Pass { overlap }
    } else {
        GateVerdict::Fail { overlap }
    }
}

// ---------------------------------------------------------------------------
// Keyphrase extraction

/// Batch-fitted statistical keyphrase ranker: candidate 1..3-grams of
/// non-stop-words, scored by frequency times inverse document frequency
/// over the fitted batch.
#[derive(Debug, Clone)]
pub struct KeyphraseRanker {
    doc_freq: BTreeMap<String, usize>,
    n_docs: usize,
}

/// A candidate phrase in one passage: normalized key, surface form, and
/// term frequency.
#[derive(Debug, Clone)]
struct Candidate {
    key: String,
    surface: String,
    tf: usize,
    len: usize,
}

fn candidate_ngrams(passage: &Passage) -> Vec<Candidate> {
    let spans = text::word_spans(&passage.text);
    let norm: Vec<String> = spans
        .iter()
        .map(|&(s, e)| {
            passage.text[s..e]
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '-')
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .collect();
    let usable: Vec<bool> =
        norm.iter().map(|t| !t.is_empty() && !text::is_stop_word(t) && t != "[math]").collect();

    let mut by_key: BTreeMap<String, Candidate> = BTreeMap::new();
    for n in 1..=3usize {
        for start in 0..norm.len().saturating_sub(n - 1) {
            let window = start..start + n;
            if !window.clone().all(|i| usable[i]) {
                continue;
            }
            let key = norm[window.clone()].join(" ");
            let surface = passage.text[spans[start].0..spans[start + n - 1].1].to_owned();
            // Skip surfaces that span line breaks; they are not phrases.
            if surface.contains('\n') {
                continue;
            }
            by_key
                .entry(key.clone())
                .and_modify(|c| c.tf += 1)
                .or_insert(Candidate { key, surface, tf: 1, len: n });
        }
    }
    by_key.into_values().collect()
}

impl KeyphraseRanker {
    pub fn fit<'a>(batch: impl IntoIterator<Item = &'a Passage>) -> KeyphraseRanker {
        let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_docs = 0usize;
        for passage in batch {
            n_docs += 1;
            for cand in candidate_ngrams(passage) {
                *doc_freq.entry(cand.key).or_insert(0) += 1;
            }
        }
        KeyphraseRanker { doc_freq, n_docs }
    }

    fn score(&self, cand: &Candidate) -> f64 {
        let df = self.doc_freq.get(&cand.key).copied().unwrap_or(0).max(1);
        let idf = libm::log(1.0 + self.n_docs.max(1) as f64 / df as f64);
        cand.tf as f64 * idf
    }

    /// Top-k phrases of `passage`, each verbatim in its text. Ties break
    /// toward longer phrases, then lexicographically.
    pub fn top_k(&self, passage: &Passage, k: usize) -> Vec<String> {
        let mut scored: Vec<(f64, Candidate)> = candidate_ngrams(passage)
            .into_iter()
            .map(|c| (self.score(&c), c))
            .collect();
        scored.sort_by(|(sa, ca), (sb, cb)| {
            sb.partial_cmp(sa)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(cb.len.cmp(&ca.len))
                .then(ca.key.cmp(&cb.key))
        });
        let mut out = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for (_, cand) in scored {
            if out.len() >= k {
                break;
            }
            if seen.insert(cand.key.clone()) {
                out.push(cand.surface);
            }
        }
        out
    }
}

/// Prompt for the LLM key-term path (long passages).
pub fn key_term_prompt(passage_text: &str) -> String {
    format!(
        "Extract the most important key terms and phrases from the following passage. \
         Reply with one term per line, using the exact wording from the passage.\n\n\
         Passage:\n{passage_text}"
    )
}

/// Up to `k` distinct keyphrases of the passage. Short passages use the
/// statistical ranker; long ones the LLM, with non-verbatim replies
/// discarded.
pub fn extract_keyphrases(
    passage: &Passage,
    k: usize,
    ranker: &KeyphraseRanker,
    llm: &dyn ChatClient,
) -> Result<Vec<String>, LlmError> {
    debug_assert!(k >= 1);
    if passage.word_count <= STATISTICAL_RANKER_MAX_WORDS {
        return Ok(ranker.top_k(passage, k));
    }
    let reply = llm.chat(&ChatRequest::new("extractor", key_term_prompt(&passage.text)))?;
    let lower_passage = passage.text.to_lowercase();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for line in reply.lines().flat_map(|l| l.split(',')) {
        let mut phrase = line.trim().trim_start_matches(['-', '*', ' ']);
        // Leading "1." / "2)" enumeration.
        let digits = phrase.chars().take_while(char::is_ascii_digit).count();
        if digits > 0 && phrase[digits..].starts_with(['.', ')']) {
            phrase = &phrase[digits + 1..];
        }
        let phrase = phrase.trim().trim_matches('"').trim();
        if phrase.is_empty() {
            continue;
        }
        // Only phrases present verbatim (case-insensitively) survive.
        if lower_passage.contains(&phrase.to_lowercase()) && seen.insert(phrase.to_lowercase()) {
            out.push(phrase.to_owned());
            if out.len() >= k {
                break;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Definition extraction (terminology)

/// The definition-extraction instruction, filled with the term-bearing
/// sentences.
pub fn definition_prompt(relevant_sentences: &str, term: &str) -> String {
    format!(
        "{relevant_sentences}. Please extract the definition of the term {term} that the above \
         sentences explicitly defined. You must just do copy-pasting and be faithful to the \
         given passage."
    )
}

fn reply_reports_nothing(reply: &str) -> bool {
    let lower = reply.trim().to_lowercase();
    lower.is_empty()
        || lower == "none"
        || lower == "n/a"
        || lower.contains("no explicit definition")
        || lower.contains("no definition")
        || lower.contains("not defined")
}

/// Extract the explicit definition of `term`, if the passage has one.
pub fn extract_definition(
    term: &str,
    passage: &Passage,
    llm: &dyn ChatClient,
    threshold: f64,
) -> Result<Option<AnswerSpan>, ExtractError> {
    let term_lower = term.to_lowercase();
    let anchors: Vec<usize> = passage
        .sentences_where(|s| find_bounded(&s.to_lowercase(), &term_lower, 0).is_some())
        .into_iter()
        .take(DEFINITION_CONTEXT_SENTENCES)
        .collect();
    if anchors.is_empty() {
        return Ok(None);
    }
    let relevant = anchors
        .iter()
        .filter_map(|&i| passage.sentence_text(i))
        .collect::<Vec<_>>()
        .join(" ");
    let reply = llm.chat(&ChatRequest::new("extractor", definition_prompt(&relevant, term)))?;
    if reply_reports_nothing(&reply) {
        return Ok(None);
    }
    let span = AnswerSpan {
        passage_id: passage.doc_id.clone(),
        query_type: QueryType::Terminology,
        answer_text: reply.trim().to_owned(),
        anchor_sentences: anchors,
        term: Some(term.to_owned()),
        method: ExtractMethod::LlmExtract,
        from_metadata: false,
    };
    match faithfulness_gate(&span, passage, threshold) {
        GateVerdict::Pass { .. } => Ok(Some(span)),
        GateVerdict::Fail { overlap } => Err(ExtractError::FaithfulnessViolation { overlap }),
    }
}

// ---------------------------------------------------------------------------
// Summary extraction (template matching)

/// Join text fragments into a sentence-punctuated summary.
fn join_summary(parts: &[&str]) -> String {
    let mut out = String::new();
    for part in parts {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(part);
        if !part.ends_with(['.', '!', '?']) {
            out.push('.');
        }
    }
    out
}

/// Sentences of the passage that share answer text: either the sentence
/// contains the (normalized) answer or one of its 8-word chunks, or the
/// sentence itself (3+ words) appears verbatim inside the answer. Used to
/// anchor metadata-derived summaries.
fn leak_anchor_sentences(answer: &str, passage: &Passage) -> Vec<usize> {
    let norm_answer = text::normalize_match(answer);
    let answer_words: Vec<&str> = norm_answer.split(' ').filter(|w| !w.is_empty()).collect();
    passage.sentences_where(|s| {
        let norm_s = text::normalize_match(s);
        let forward = if answer_words.len() < crate::redact::LEAK_CHUNK_WORDS {
            contains_word_seq(&norm_s, &answer_words)
        } else {
            answer_words
                .windows(crate::redact::LEAK_CHUNK_WORDS)
                .any(|chunk| contains_word_seq(&norm_s, chunk))
        };
        if forward {
            return true;
        }
        let sent_words: Vec<&str> = norm_s.split(' ').filter(|w| !w.is_empty()).collect();
        sent_words.len() >= 3 && contains_word_seq(&norm_answer, &sent_words)
    })
}

/// Whole-word subsequence containment in a normalized string.
pub(crate) fn contains_word_seq(normalized_haystack: &str, words: &[&str]) -> bool {
    if words.is_empty() {
        return false;
    }
    let needle = words.join(" ");
    find_bounded(normalized_haystack, &needle, 0).is_some()
}

/// Per-source summary rules. Returns None when no rule fires.
pub fn extract_summary(
    source: SourceKind,
    passage: &Passage,
    title: &str,
    description: &str,
) -> Option<AnswerSpan> {
    let mk = |answer: String, anchors: Vec<usize>, from_metadata: bool| AnswerSpan {
        passage_id: passage.doc_id.clone(),
        query_type: QueryType::Summary,
        answer_text: answer,
        anchor_sentences: anchors,
        term: None,
        method: ExtractMethod::TemplateMatch,
        from_metadata,
    };

    match source {
        SourceKind::Preprint => {
            if let Some(abs) = passage.meta.get("abstract").filter(|a| !a.trim().is_empty()) {
                let anchors = leak_anchor_sentences(abs, passage);
                return Some(mk(abs.clone(), anchors, true));
            }
            let in_summary = passage.sentences_where(|s| {
                s.trim_start().to_lowercase().starts_with("in summary")
            });
            if !in_summary.is_empty() {
                let answer = in_summary
                    .iter()
                    .filter_map(|&i| passage.sentence_text(i))
                    .collect::<Vec<_>>()
                    .join(" ");
                return Some(mk(answer, in_summary, false));
            }
            // Key findings: the final paragraph of the section, when it
            // announces results.
            let last_para_start = passage.text.rfind("\n\n").map(|i| i + 2).unwrap_or(0);
            let para = &passage.text[last_para_start..];
            let lower = para.to_lowercase();
            if ["we show", "we find", "our results"].iter().any(|cue| lower.contains(cue)) {
                let anchors = passage
                    .sentences
                    .iter()
                    .enumerate()
                    .filter(|&(_, &(s, _))| s >= last_para_start)
                    .map(|(i, _)| i)
                    .collect::<Vec<_>>();
                if !anchors.is_empty() {
                    let answer = anchors
                        .iter()
                        .filter_map(|&i| passage.sentence_text(i))
                        .collect::<Vec<_>>()
                        .join(" ");
                    return Some(mk(answer, anchors, false));
                }
            }
            None
        }
        SourceKind::News => {
            // Tl;dr indicator wins when present.
            if let Some(idx) = passage
                .sentences_where(|s| s.to_lowercase().contains("tl;dr"))
                .first()
                .copied()
            {
                let sentence = passage.sentence_text(idx).unwrap_or_default();
                let lower = sentence.to_lowercase();
                let after = lower.find("tl;dr").map(|p| p + "tl;dr".len()).unwrap_or(0);
                let tail = sentence[after..].trim_start_matches([':', ',', ' ']).trim();
                if !tail.is_empty() {
                    return Some(mk(tail.to_owned(), alloc::vec![idx], false));
                }
            }
            if title.trim().is_empty() && description.trim().is_empty() {
                return None;
            }
            let answer = join_summary(&[title, description]);
            let anchors = leak_anchor_sentences(&answer, passage);
            Some(mk(answer, anchors, true))
        }
        SourceKind::CodeRepo => {
            let lines: Vec<&str> =
                passage.text.lines().filter(|l| !l.trim().is_empty()).take(3).collect();
            if description.trim().is_empty() && lines.is_empty() {
                return None;
            }
            let mut parts: Vec<&str> = Vec::new();
            if !description.trim().is_empty() {
                parts.push(description);
            }
            parts.extend(&lines);
            let answer = join_summary(&parts);
            let anchors = leak_anchor_sentences(&answer, passage);
            Some(mk(answer, anchors, !lines.is_empty() && description.trim().is_empty()))
        }
    }
}

// ---------------------------------------------------------------------------
// Cue-based extraction (purpose / example / future)

/// Facet name used in the distillation prompt.
fn facet_name(query_type: QueryType) -> &'static str {
    match query_type {
        QueryType::Purpose => "purposes",
        QueryType::Example => "examples",
        QueryType::Future => "future predictions",
        _ => "key information",
    }
}

pub fn distill_prompt(sentence: &str, query_type: QueryType) -> String {
    format!(
        "{sentence}\n\nFrom the sentence above, extract the analysis about {} as the target \
         answer. You must just do copy-pasting and be faithful to the given sentence.",
        facet_name(query_type)
    )
}

/// Result of a cue extraction pass: surviving spans plus the count of
/// spans dropped by the faithfulness gate.
#[derive(Debug, Clone, Default)]
pub struct CueExtraction {
    pub spans: Vec<AnswerSpan>,
    pub dropped_unfaithful: usize,
}

/// Deterministic cue scan followed by LLM distillation of each matched
/// sentence. Example spans are suppressed for code-repository passages.
pub fn extract_by_cues(
    passage: &Passage,
    source: SourceKind,
    cues: &CueSet,
    llm: &dyn ChatClient,
    threshold: f64,
) -> Result<CueExtraction, LlmError> {
    debug_assert!(matches!(
        cues.query_type,
        QueryType::Purpose | QueryType::Example | QueryType::Future
    ));
    if cues.query_type == QueryType::Example && source == SourceKind::CodeRepo {
        return Ok(CueExtraction::default());
    }
    let matched = passage.sentences_where(|s| cues.matches(s));
    let mut out = CueExtraction::default();
    for idx in matched {
        let sentence = passage.sentence_text(idx).unwrap_or_default().to_owned();
        let reply = llm.chat(&ChatRequest::new("extractor", distill_prompt(&sentence, cues.query_type)))?;
        if reply_reports_nothing(&reply) {
            continue;
        }
        let span = AnswerSpan {
            passage_id: passage.doc_id.clone(),
            query_type: cues.query_type,
            answer_text: reply.trim().to_owned(),
            anchor_sentences: alloc::vec![idx],
            term: None,
            method: ExtractMethod::LlmExtract,
            from_metadata: false,
        };
        match faithfulness_gate(&span, passage, threshold) {
            GateVerdict::Pass { .. } => out.spans.push(span),
            GateVerdict::Fail { .. } => out.dropped_unfaithful += 1,
        }
    }
    Ok(out)
}
