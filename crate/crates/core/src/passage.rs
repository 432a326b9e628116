//! Plain-text passages and the length gate.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{sentence, text};

/// Default maximum passage length in words.
pub const DEFAULT_MAX_WORDS: usize = 1800;

/// A cleaned plain-text passage with precomputed sentence offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    pub text: String,
    /// Byte-offset sentence spans into `text`, sorted and non-overlapping.
    pub sentences: Vec<(usize, usize)>,
    pub word_count: usize,
    pub section_label: String,
    /// Free-form metadata (e.g. the retained abstract for preprints).
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Passage {
    /// Build a passage from already-cleaned text; computes the word count
    /// and sentence segmentation.
    pub fn from_text(doc_id: &str, section_label: &str, text_body: &str) -> Passage {
        Passage {
            doc_id: String::from(doc_id),
            text: String::from(text_body),
            sentences: sentence::split_sentences(text_body),
            word_count: text::word_count(text_body),
            section_label: String::from(section_label),
            meta: BTreeMap::new(),
        }
    }

    pub fn sentence_text(&self, index: usize) -> Option<&str> {
        self.sentences.get(index).map(|&(s, e)| &self.text[s..e])
    }

    /// Indices of sentences whose text satisfies `pred`.
    pub fn sentences_where(&self, mut pred: impl FnMut(&str) -> bool) -> Vec<usize> {
        self.sentences
            .iter()
            .enumerate()
            .filter(|&(_, &(s, e))| pred(&self.text[s..e]))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Outcome of the length gate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthVerdict {
    Accept,
    Reject { word_count: usize, max_words: usize },
}

/// Accept iff the passage is at most `max_words` words; the cap is
/// inclusive ("max length").
pub fn length_gate(passage: &Passage, max_words: usize) -> LengthVerdict {
    debug_assert!(max_words >= 1);
    if passage.word_count > max_words {
        LengthVerdict::Reject { word_count: passage.word_count, max_words }
    } else {
        LengthVerdict::Accept
    }
}
