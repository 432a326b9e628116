//! N-gram overlap between test texts and a training corpus, with the two
//! standard contamination policies: any shared n-gram, or a shared
//! fraction above a threshold.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::hash;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    /// Dirty iff the example shares at least one n-gram with the corpus.
    AnyHit,
    /// Dirty iff at least this fraction of the example's n-grams appears
    /// in the corpus.
    FractionThreshold(f64),
}

/// The two policies with their conventional parameters: 13-gram any-hit
/// and 70% of 8-grams.
pub const ANY_HIT_N: usize = 13;
pub const FRACTION_N: usize = 8;
pub const FRACTION_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleOverlap {
    pub overlap_fraction: f64,
    pub dirty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramOverlapReport {
    pub n: usize,
    pub policy: OverlapPolicy,
    pub per_example: Vec<ExampleOverlap>,
}

impl NgramOverlapReport {
    pub fn dirty_count(&self) -> usize {
        self.per_example.iter().filter(|e| e.dirty).count()
    }
}

/// Hashed set of the n-grams of a training corpus, after match
/// normalization (lowercase, punctuation stripped).
#[derive(Debug, Clone)]
pub struct NgramIndex {
    n: usize,
    grams: BTreeSet<u64>,
}

impl NgramIndex {
    pub fn new(n: usize) -> NgramIndex {
        NgramIndex { n: n.max(1), grams: BTreeSet::new() }
    }

    pub fn build(train_corpus: &[&str], n: usize) -> NgramIndex {
        let mut index = NgramIndex::new(n);
        for doc in train_corpus {
            index.add(doc);
        }
        index
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn add(&mut self, doc: &str) {
        let tokens = text::tokens(doc);
        for gram in windows(&tokens, self.n) {
            self.grams.insert(gram);
        }
    }

    pub fn contains_hash(&self, gram: u64) -> bool {
        self.grams.contains(&gram)
    }

    /// Fraction of `example`'s n-grams present in the index. An example
    /// with fewer than n words has no n-grams and overlaps nothing.
    pub fn overlap_fraction(&self, example: &str) -> f64 {
        let tokens = text::tokens(example);
        let grams: Vec<u64> = windows(&tokens, self.n).collect();
        if grams.is_empty() {
            return 0.0;
        }
        let hits = grams.iter().filter(|g| self.grams.contains(g)).count();
        hits as f64 / grams.len() as f64
    }
}

fn windows<'a>(tokens: &'a [String], n: usize) -> impl Iterator<Item = u64> + 'a {
    let count = tokens.len().saturating_sub(n.saturating_sub(1));
    (0..count).map(move |i| {
        let refs: Vec<&str> = tokens[i..i + n].iter().map(String::as_str).collect();
        hash::ngram_hash(&refs)
    })
}

/// Scan every test text against the corpus index under a policy.
pub fn ngram_overlap(
    test_texts: &[&str],
    train_corpus: &[&str],
    n: usize,
    policy: OverlapPolicy,
) -> NgramOverlapReport {
    let index = NgramIndex::build(train_corpus, n);
    let per_example = test_texts
        .iter()
        .map(|t| {
            let fraction = index.overlap_fraction(t);
            let dirty = match policy {
                OverlapPolicy::AnyHit => fraction > 0.0,
                OverlapPolicy::FractionThreshold(t) => fraction >= t,
            };
            ExampleOverlap { overlap_fraction: fraction, dirty }
        })
        .collect();
    NgramOverlapReport { n, policy, per_example }
}
