//! Answer redaction: replace answer-bearing sentences with placeholder
//! sentences, and check that the answer cannot be copied from what
//! remains.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::extract::AnswerSpan;
use crate::llm::{ChatClient, ChatRequest};
use crate::passage::Passage;
use crate::text;
use crate::types::QueryType;

/// A leak is an answer chunk of at least this many contiguous words found
/// elsewhere in the redacted passage (aligned with the 8-gram overlap
/// convention).
pub const LEAK_CHUNK_WORDS: usize = 8;

/// One sentence replacement. `redacted_start` is the byte offset of the
/// placeholder in the redacted text, which makes the edit invertible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderEdit {
    pub sentence_index: usize,
    pub original_text: String,
    pub placeholder_text: String,
    pub redacted_start: usize,
}

/// A passage with its answer-bearing sentences replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactedPassage {
    pub passage_id: String,
    pub text: String,
    pub edits: Vec<PlaceholderEdit>,
    pub redacted_for: AnswerSpan,
}

impl RedactedPassage {
    /// Reverse-apply the edits; must reproduce the original passage text
    /// byte for byte.
    pub fn reconstruct(&self) -> String {
        let mut text = self.text.clone();
        for edit in self.edits.iter().rev() {
            let start = edit.redacted_start;
            let end = start + edit.placeholder_text.len();
            text.replace_range(start..end, &edit.original_text);
        }
        text
    }
}

/// Example placeholders shown to the model when asking for a replacement
/// sentence.
pub const PLACEHOLDER_EXAMPLES: &str = "\"The reason to look at loss is explained here.\", \
\"The AFT model is explained here.\", \"The summary of this project is explained here.\"";

/// The placeholder-generation instruction, filled with the query and the
/// sentence being replaced.
pub fn placeholder_prompt(query: &str, relevant_sentence: &str) -> String {
    format!(
        "{query}, {relevant_sentence}. Based on the above given information, generate a \
         placeholder sentence considering the following examples {PLACEHOLDER_EXAMPLES}."
    )
}

/// Template fallback used when the model's placeholder fails validation.
pub fn fallback_placeholder(span: &AnswerSpan) -> String {
    let slot = match (&span.query_type, &span.term) {
        (QueryType::Terminology, Some(term)) => term.clone(),
        (qt, _) => String::from(qt.slot_word()),
    };
    format!("The {slot} is explained here.")
}

fn placeholder_is_valid(placeholder: &str, original: &str, answer: &str) -> bool {
    let p = placeholder.trim();
    if p.is_empty() || p == original {
        return false;
    }
    let norm_answer = text::normalize_match(answer);
    if norm_answer.is_empty() {
        return true;
    }
    let norm_placeholder = text::normalize_match(p);
    text::find_word_bounded(&norm_placeholder, &norm_answer, 0).is_none()
}

/// Replace every anchor sentence of `span` with a placeholder sentence.
///
/// The placeholder is asked of the model first; a fixed template stands
/// in whenever the model fails or produces something that leaks the
/// answer, so redaction itself cannot fail.
pub fn redact(
    passage: &Passage,
    span: &AnswerSpan,
    query: Option<&str>,
    llm: &dyn ChatClient,
) -> RedactedPassage {
    let mut anchors: Vec<usize> =
        span.anchor_sentences.iter().copied().filter(|&i| i < passage.sentences.len()).collect();
    anchors.sort_unstable();
    anchors.dedup();

    let query_text = match query {
        Some(q) => q.to_owned(),
        None => format!("What is the {} here?", span.query_type.slot_word()),
    };

    let mut text_out = String::with_capacity(passage.text.len());
    let mut edits = Vec::new();
    let mut cursor = 0usize;
    for &idx in &anchors {
        let (s, e) = passage.sentences[idx];
        let original = &passage.text[s..e];
        let candidate = llm
            .chat(&ChatRequest::new("redactor", placeholder_prompt(&query_text, original)))
            .ok()
            .map(|r| r.trim().to_owned());
        let placeholder = match candidate {
            Some(p) if placeholder_is_valid(&p, original, &span.answer_text) => p,
            _ => fallback_placeholder(span),
        };
        text_out.push_str(&passage.text[cursor..s]);
        let redacted_start = text_out.len();
        text_out.push_str(&placeholder);
        edits.push(PlaceholderEdit {
            sentence_index: idx,
            original_text: original.to_owned(),
            placeholder_text: placeholder,
            redacted_start,
        });
        cursor = e;
    }
    text_out.push_str(&passage.text[cursor..]);

    RedactedPassage {
        passage_id: passage.doc_id.clone(),
        text: text_out,
        edits,
        redacted_for: span.clone(),
    }
}

/// Outcome of the copyability scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Copyability {
    Clean,
    /// Byte offsets in the redacted text where the answer (or a long
    /// chunk of it) is still findable.
    Leaky(Vec<usize>),
}

/// Leaky iff the normalized answer, or any contiguous chunk of
/// [`LEAK_CHUNK_WORDS`] of its words, still occurs in the redacted text.
pub fn copyability_check(redacted: &RedactedPassage, span: &AnswerSpan) -> Copyability {
    let norm_answer = text::normalize_match(&span.answer_text);
    let answer_words: Vec<&str> = norm_answer.split(' ').filter(|w| !w.is_empty()).collect();
    if answer_words.is_empty() {
        return Copyability::Clean;
    }
    let (norm_text, map) = text::normalize_match_with_map(&redacted.text);

    let mut patterns: Vec<String> = Vec::new();
    patterns.push(answer_words.join(" "));
    if answer_words.len() > LEAK_CHUNK_WORDS {
        for chunk in answer_words.windows(LEAK_CHUNK_WORDS) {
            patterns.push(chunk.join(" "));
        }
    }

    // Collect match ranges in the normalized text, then merge overlapping
    // hits so one leak site reports one location.
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    for pattern in &patterns {
        let mut from = 0usize;
        while let Some(at) = text::find_word_bounded(&norm_text, pattern, from) {
            ranges.push((at, at + pattern.len()));
            from = at + 1;
        }
    }
    ranges.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in ranges {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    if merged.is_empty() {
        Copyability::Clean
    } else {
        Copyability::Leaky(merged.iter().map(|&(s, _)| map.get(s).copied().unwrap_or(0)).collect())
    }
}
