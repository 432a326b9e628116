//! Query generation: fixed templates for summaries, template selection
//! plus slot filling through the model for everything else.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::extract::AnswerSpan;
use crate::llm::{ChatClient, ChatRequest};
use crate::passage::Passage;
use crate::text;
use crate::types::QueryType;

/// A query template with named `{slot}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTemplate {
    pub query_type: QueryType,
    pub pattern: String,
    pub slots: Vec<String>,
}

impl QueryTemplate {
    pub fn new(query_type: QueryType, pattern: &str, slots: &[&str]) -> QueryTemplate {
        QueryTemplate {
            query_type,
            pattern: pattern.to_owned(),
            slots: slots.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Substitute slot values into the pattern.
    pub fn fill(&self, fills: &BTreeMap<String, String>) -> String {
        let mut out = self.pattern.clone();
        for slot in &self.slots {
            if let Some(value) = fills.get(slot) {
                out = out.replace(&format!("{{{slot}}}"), value);
            }
        }
        out
    }
}

/// A generated natural-language query for one answer span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedQuery {
    pub span_passage_id: String,
    pub query_type: QueryType,
    pub template_id: usize,
    pub text: String,
    pub filled_slots: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("no template avoids leaking the answer into the query")]
    LeakUnavoidable,
    #[error("no templates provided for this query type")]
    NoTemplates,
}

/// Fixed summary templates; the first two are the published ones.
pub fn summary_templates() -> Vec<QueryTemplate> {
    [
        "what is this passage about?",
        "what are the main points raised in this article?",
        "Can you summarise this passage briefly?",
        "What is the key takeaway of this text?",
        "What does this document mainly discuss?",
    ]
    .iter()
    .map(|p| QueryTemplate::new(QueryType::Summary, p, &[]))
    .collect()
}

/// Default slotted template sets, four per type.
pub fn default_templates(query_type: QueryType) -> Vec<QueryTemplate> {
    let mk = |patterns: &[&str], slot: &str| {
        patterns
            .iter()
            .map(|p| QueryTemplate::new(query_type, p, &[slot]))
            .collect::<Vec<_>>()
    };
    match query_type {
        QueryType::Summary => summary_templates(),
        QueryType::Terminology => mk(
            &[
                "What is {term}?",
                "Can you explain {term}?",
                "What does {term} refer to?",
                "How is {term} defined in this passage?",
            ],
            "term",
        ),
        QueryType::Purpose => mk(
            &[
                "What is the purpose of {subject}?",
                "Why is {subject} used?",
                "What is the role of {subject}?",
                "What benefit does {subject} provide?",
            ],
            "subject",
        ),
        QueryType::Example => mk(
            &[
                "Can you give an example of {subject}?",
                "What is an example of {subject}?",
                "Can you explain {subject} with an example?",
                "What examples are given for {subject}?",
            ],
            "subject",
        ),
        QueryType::Future => mk(
            &[
                "What are the potential applications of {subject}?",
                "How could {subject} be used in the future?",
                "What future developments are expected for {subject}?",
                "What do the forecasts indicate about {subject}?",
            ],
            "subject",
        ),
    }
}

fn query_leaks_answer(query: &str, answer: &str) -> bool {
    let norm_answer = text::normalize_match(answer);
    if norm_answer.is_empty() {
        return false;
    }
    let norm_query = text::normalize_match(query);
    text::find_word_bounded(&norm_query, &norm_answer, 0).is_some()
}

/// Seeded selection among the fixed summary templates; seed 0 picks the
/// first published template.
pub fn gen_summary_query(span: &AnswerSpan, seed: u64) -> GeneratedQuery {
    debug_assert_eq!(span.query_type, QueryType::Summary);
    let templates = summary_templates();
    let idx = (seed % templates.len() as u64) as usize;
    GeneratedQuery {
        span_passage_id: span.passage_id.clone(),
        query_type: QueryType::Summary,
        template_id: idx,
        text: templates[idx].pattern.clone(),
        filled_slots: BTreeMap::new(),
    }
}

/// The template-selection instruction given to the model.
pub fn template_choice_prompt(answer_text: &str, templates: &[QueryTemplate]) -> String {
    let mut options = String::new();
    for (i, t) in templates.iter().enumerate() {
        options.push_str(&format!("{i}: {}\n", t.pattern));
    }
    format!(
        "Answer text: {answer_text}\n\nTemplate options:\n{options}\n\
         Select the most suitable template and fill its slots with appropriate terms or phrases \
         from the answer. Reply with JSON of the form \
         {{\"template\": <index>, \"slots\": {{\"<name>\": \"<value>\"}}}}."
    )
}

/// Parse the model's `{"template": i, "slots": {...}}` reply without a
/// full JSON parser: extract the index and quoted slot pairs.
fn parse_choice_reply(reply: &str) -> Option<(usize, BTreeMap<String, String>)> {
    let tpl_at = reply.find("\"template\"")?;
    let after = &reply[tpl_at + "\"template\"".len()..];
    let colon = after.find(':')?;
    let digits: String = after[colon + 1..]
        .trim_start()
        .chars()
        .take_while(char::is_ascii_digit)
        .collect();
    let index: usize = digits.parse().ok()?;

    let mut slots = BTreeMap::new();
    if let Some(slots_at) = reply.find("\"slots\"") {
        let body = &reply[slots_at + "\"slots\"".len()..];
        let open = body.find('{')?;
        let close = body[open..].find('}')? + open;
        let inner = &body[open + 1..close];
        let mut rest = inner;
        while let Some(q1) = rest.find('"') {
            let after_q1 = &rest[q1 + 1..];
            let q2 = after_q1.find('"')?;
            let key = &after_q1[..q2];
            let after_key = &after_q1[q2 + 1..];
            let colon = after_key.find(':')?;
            let after_colon = after_key[colon + 1..].trim_start();
            let val_open = after_colon.strip_prefix('"')?;
            let val_close = val_open.find('"')?;
            let value = &val_open[..val_close];
            slots.insert(key.to_owned(), value.to_owned());
            rest = &val_open[val_close + 1..];
        }
    }
    Some((index, slots))
}

/// The longest capitalized word run in the anchor text, or the span's
/// term, used as a last-resort subject.
pub fn fallback_subject(span: &AnswerSpan, passage: &Passage) -> String {
    if let Some(term) = &span.term {
        return term.clone();
    }
    let anchor = span.anchor_text(passage);
    let source = if anchor.is_empty() { span.answer_text.as_str() } else { anchor.as_str() };
    let words: Vec<&str> = source.split_whitespace().collect();
    let mut best: (usize, usize) = (0, 0); // (start, len)
    let mut run_start = 0usize;
    let mut run_len = 0usize;
    for (i, w) in words.iter().enumerate() {
        // A sentence-initial capital says nothing; runs start at word 1.
        let capitalized = i > 0 && w.chars().next().is_some_and(char::is_uppercase);
        if capitalized {
            if run_len == 0 {
                run_start = i;
            }
            run_len += 1;
            if run_len > best.1 {
                best = (run_start, run_len);
            }
        } else {
            run_len = 0;
        }
    }
    if best.1 > 0 {
        let phrase: Vec<&str> = words[best.0..best.0 + best.1]
            .iter()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
            .collect();
        return phrase.join(" ");
    }
    // No capitalized phrase: first few content words of the anchor.
    let content = text::content_tokens(source);
    content.into_iter().take(3).collect::<Vec<_>>().join(" ")
}

/// Template selection + slot filling through the model, validated, with
/// a deterministic fallback. Never fatal unless every candidate query
/// would contain the answer.
pub fn gen_slotted_query(
    span: &AnswerSpan,
    passage: &Passage,
    templates: &[QueryTemplate],
    llm: &dyn ChatClient,
) -> Result<GeneratedQuery, QueryError> {
    if templates.is_empty() {
        return Err(QueryError::NoTemplates);
    }
    debug_assert!(templates.iter().all(|t| t.query_type == span.query_type));

    if let Ok(reply) =
        llm.chat(&ChatRequest::new("querygen", template_choice_prompt(&span.answer_text, templates)))
    {
        if let Some((idx, fills)) = parse_choice_reply(&reply) {
            if let Some(template) = templates.get(idx) {
                let all_filled = template.slots.iter().all(|s| {
                    fills.get(s).is_some_and(|v| !v.trim().is_empty())
                });
                if all_filled {
                    let tex = template.fill(&fills);
                    if !query_leaks_answer(&tex, &span.answer_text) {
                        return Ok(GeneratedQuery {
                            span_passage_id: span.passage_id.clone(),
                            query_type: span.query_type,
                            template_id: idx,
                            text: tex,
                            filled_slots: fills,
                        });
                    }
                }
            }
        }
    }

    // Fallback: first template, subject from the term or anchor.
    let template = &templates[0];
    let mut fills = BTreeMap::new();
    let subject = fallback_subject(span, passage);
    for slot in &template.slots {
        let value = if slot == "term" {
            span.term.clone().unwrap_or_else(|| subject.clone())
        } else {
            subject.clone()
        };
        fills.insert(slot.clone(), value);
    }
    let tex = template.fill(&fills);
    if query_leaks_answer(&tex, &span.answer_text) {
        return Err(QueryError::LeakUnavoidable);
    }
    Ok(GeneratedQuery {
        span_passage_id: span.passage_id.clone(),
        query_type: span.query_type,
        template_id: 0,
        text: tex,
        filled_slots: fills,
    })
}
