//! The build pipeline: raw documents -> passages -> extracted answers ->
//! queries -> redacted passages -> leak-checked test instances.

use benchforge_core::assemble::{InstanceFlags, Provenance, TestInstance};
use benchforge_core::extract::{
    self, AnswerSpan, CueSet, ExtractError, KeyphraseRanker, DEFAULT_FAITHFULNESS_THRESHOLD,
};
use benchforge_core::llm::ChatClient;
use benchforge_core::passage::{length_gate, LengthVerdict, Passage, DEFAULT_MAX_WORDS};
use benchforge_core::query::{self, GeneratedQuery, QueryError};
use benchforge_core::redact::{copyability_check, redact, Copyability};
use benchforge_core::types::{DocFormat, QueryType, SourceKind};
use benchforge_core::{hash, text};
use serde::{Deserialize, Serialize};

use crate::collector::RawDocument;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub max_words: usize,
    pub faithfulness_threshold: f64,
    /// Keyphrases tried per passage for terminology questions.
    pub keyphrase_k: usize,
    pub seed: u64,
    pub pipeline_version: String,
}

impl Default for BuildParams {
    fn default() -> BuildParams {
        BuildParams {
            max_words: DEFAULT_MAX_WORDS,
            faithfulness_threshold: DEFAULT_FAITHFULNESS_THRESHOLD,
            keyphrase_k: 3,
            seed: 0,
            pipeline_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Why candidate material fell out of the pipeline.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    /// Documents that failed textualization.
    pub parse_failed: usize,
    /// Passages over the word cap.
    pub over_length: usize,
    /// Answers rejected by the faithfulness gate.
    pub unfaithful: usize,
    /// Instances rejected by the copyability check.
    pub leaky: usize,
    /// Spans whose query could not avoid leaking the answer.
    pub query_failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildOutput {
    pub instances: Vec<TestInstance>,
    pub drops: DropCounts,
    pub documents_in: usize,
    pub passages_kept: usize,
}

/// Reduce a raw document to a passage, by format.
pub fn textualize(doc: &RawDocument) -> Result<Passage, String> {
    let body = doc.payload_text();
    let mut passage = match doc.format {
        DocFormat::Latex => {
            benchforge_core::latex::latex_to_passage(&doc.id, &body).map_err(|e| e.to_string())?
        }
        DocFormat::Html => {
            benchforge_core::html::html_article_to_text(&doc.id, &body).map_err(|e| e.to_string())?
        }
        DocFormat::Markdown => benchforge_core::markdown::markdown_to_text(&doc.id, &body),
    };
    // Source metadata backfills what the payload did not carry.
    if !doc.title.is_empty() {
        passage.meta.entry("title".into()).or_insert_with(|| doc.title.clone());
    }
    if !doc.description.is_empty() {
        passage.meta.entry("description".into()).or_insert_with(|| doc.description.clone());
    }
    Ok(passage)
}

fn extract_spans(
    passage: &Passage,
    source: SourceKind,
    ranker: &KeyphraseRanker,
    llm: &dyn ChatClient,
    params: &BuildParams,
    drops: &mut DropCounts,
) -> Vec<AnswerSpan> {
    let mut spans = Vec::new();

    match extract::extract_keyphrases(passage, params.keyphrase_k, ranker, llm) {
        Ok(terms) => {
            for term in terms {
                match extract::extract_definition(&term, passage, llm, params.faithfulness_threshold)
                {
                    Ok(Some(span)) => spans.push(span),
                    Ok(None) => {}
                    Err(ExtractError::FaithfulnessViolation { .. }) => drops.unfaithful += 1,
                    Err(ExtractError::Llm(e)) => log::warn!("definition extraction failed: {e}"),
                }
            }
        }
        Err(e) => log::warn!("keyphrase extraction failed: {e}"),
    }

    let title = passage.meta.get("title").cloned().unwrap_or_default();
    let description = passage.meta.get("description").cloned().unwrap_or_default();
    if let Some(span) = extract::extract_summary(source, passage, &title, &description) {
        spans.push(span);
    }

    for qt in [QueryType::Purpose, QueryType::Example, QueryType::Future] {
        let cues = CueSet::default_for(qt);
        match extract::extract_by_cues(passage, source, &cues, llm, params.faithfulness_threshold) {
            Ok(out) => {
                drops.unfaithful += out.dropped_unfaithful;
                spans.extend(out.spans);
            }
            Err(e) => log::warn!("cue extraction failed: {e}"),
        }
    }
    spans
}

fn generate_query(
    span: &AnswerSpan,
    passage: &Passage,
    llm: &dyn ChatClient,
    seed: u64,
) -> Result<GeneratedQuery, QueryError> {
    if span.query_type == QueryType::Summary {
        return Ok(query::gen_summary_query(span, seed));
    }
    let templates = query::default_templates(span.query_type);
    query::gen_slotted_query(span, passage, &templates, llm)
}

/// Run the full build over a document set. Deterministic for a fixed
/// document set, stub model, and seed.
pub fn build_instances(
    docs: &[RawDocument],
    llm: &dyn ChatClient,
    params: &BuildParams,
) -> BuildOutput {
    let mut out = BuildOutput { documents_in: docs.len(), ..BuildOutput::default() };

    let mut sorted: Vec<&RawDocument> = docs.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut passages: Vec<(&RawDocument, Passage)> = Vec::new();
    for doc in sorted {
        match textualize(doc) {
            Ok(p) => match length_gate(&p, params.max_words) {
                LengthVerdict::Accept => passages.push((doc, p)),
                LengthVerdict::Reject { .. } => out.drops.over_length += 1,
            },
            Err(reason) => {
                log::warn!("dropping {}: {reason}", doc.id);
                out.drops.parse_failed += 1;
            }
        }
    }
    out.passages_kept = passages.len();

    let ranker = KeyphraseRanker::fit(passages.iter().map(|(_, p)| p));

    for (doc, passage) in &passages {
        let spans = extract_spans(passage, doc.source, &ranker, llm, params, &mut out.drops);
        for span in spans {
            let span_seed = hash::mix_seed(params.seed, &format!("{}:{}", passage.doc_id, span.query_type));
            let query = match generate_query(&span, passage, llm, span_seed) {
                Ok(q) => q,
                Err(_) => {
                    out.drops.query_failed += 1;
                    continue;
                }
            };
            let redacted = redact(passage, &span, Some(&query.text), llm);
            match copyability_check(&redacted, &span) {
                Copyability::Clean => {}
                Copyability::Leaky(_) => {
                    out.drops.leaky += 1;
                    continue;
                }
            }
            // Belt and braces: the normalized answer must be gone.
            debug_assert!(
                span.answer_text.trim().is_empty()
                    || text::find_word_bounded(
                        &text::normalize_match(&redacted.text),
                        &text::normalize_match(&span.answer_text),
                        0,
                    )
                    .is_none()
            );
            let id = TestInstance::compute_id(
                doc.source,
                span.query_type,
                &redacted.text,
                &query.text,
                &span.answer_text,
            );
            out.instances.push(TestInstance {
                id,
                source: doc.source,
                query_type: span.query_type,
                passage_text: redacted.text.clone(),
                query: query.text.clone(),
                answer: span.answer_text.clone(),
                provenance: Provenance {
                    url: doc.url.clone(),
                    created_at: doc.created_at,
                    pipeline_version: params.pipeline_version.clone(),
                    edits: redacted.edits.clone(),
                },
                flags: InstanceFlags { leak_checked: true },
            });
        }
    }
    out.instances.sort_by(|a, b| a.id.cmp(&b.id));
    out.instances.dedup_by(|a, b| a.id == b.id);
    out
}
