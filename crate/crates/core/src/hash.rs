//! Stable, dependency-free hashing for document ids, cache keys, and
//! n-gram shingles. FNV-1a; not cryptographic, but deterministic across
//! platforms and releases, which is what the pipeline needs.

use alloc::string::String;
use core::fmt::Write;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv64(bytes: &[u8]) -> u64 {
    fnv64_seeded(FNV_OFFSET, bytes)
}

pub fn fnv64_seeded(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = seed;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// 128 bits from two independently seeded FNV passes, as a 32-char hex id.
pub fn stable_id(bytes: &[u8]) -> String {
    let a = fnv64(bytes);
    // Second pass with a perturbed seed so the halves are independent.
    let b = fnv64_seeded(FNV_OFFSET ^ 0x9e37_79b9_7f4a_7c15, bytes);
    let mut s = String::with_capacity(32);
    let _ = write!(s, "{a:016x}{b:016x}");
    s
}

/// Deterministic id for a fetched document.
pub fn document_id(source: &str, url: &str) -> String {
    let mut buf = alloc::vec::Vec::with_capacity(source.len() + url.len() + 1);
    buf.extend_from_slice(source.as_bytes());
    buf.push(0x1f);
    buf.extend_from_slice(url.as_bytes());
    stable_id(&buf)
}

/// Hash of a word n-gram; words are joined with a separator byte that
/// cannot occur inside a word, so ("ab","c") and ("a","bc") differ.
pub fn ngram_hash(words: &[&str]) -> u64 {
    let mut h = FNV_OFFSET;
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(FNV_PRIME);
        }
        h = fnv64_seeded(h, w.as_bytes());
    }
    h
}

/// Fold extra state into a seed; used to derive per-item RNG streams.
pub fn mix_seed(seed: u64, tag: &str) -> u64 {
    fnv64_seeded(seed ^ FNV_OFFSET, tag.as_bytes())
}
