//! Pure algorithms for building and auditing contamination-free reading
//! comprehension benchmarks: text reduction, key-information extraction,
//! answer redaction, query templating, perplexity and n-gram contamination
//! probes, and judge aggregation.
//!
//! This crate is `no_std` + `alloc`; everything here is deterministic given
//! its inputs. Networking, model endpoints, and file formats live in the
//! companion `benchforge` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assemble;
pub mod bigram;
pub mod extract;
pub mod hash;
pub mod html;
pub mod judge;
pub mod latex;
pub mod llm;
pub mod markdown;
pub mod ngram;
pub mod passage;
pub mod probe;
pub mod query;
pub mod redact;
pub mod rng;
pub mod sentence;
pub mod text;
pub mod types;
