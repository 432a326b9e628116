//! Dataset assembly: versioned test instances, the real-world query-type
//! distribution, quota sampling, and the statistics table.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::hash;
use crate::redact::PlaceholderEdit;
use crate::rng;
use crate::types::{QueryType, SourceKind};

/// Observed frequencies of the five in-scope query categories in real
/// human-assistant conversations (out of 975 categorized queries).
pub const TYPE_FREQUENCIES: [(QueryType, u32); 5] = [
    (QueryType::Terminology, 471),
    (QueryType::Summary, 272),
    (QueryType::Purpose, 144),
    (QueryType::Example, 48),
    (QueryType::Future, 40),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub url: String,
    pub created_at: i64,
    pub pipeline_version: String,
    #[serde(default)]
    pub edits: Vec<PlaceholderEdit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFlags {
    pub leak_checked: bool,
}

/// One benchmark item: redacted passage + query + reference answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestInstance {
    pub id: String,
    pub source: SourceKind,
    pub query_type: QueryType,
    pub passage_text: String,
    pub query: String,
    pub answer: String,
    pub provenance: Provenance,
    pub flags: InstanceFlags,
}

impl TestInstance {
    /// Content-derived stable id.
    pub fn compute_id(
        source: SourceKind,
        query_type: QueryType,
        passage_text: &str,
        query: &str,
        answer: &str,
    ) -> String {
        let mut buf = Vec::new();
        for part in [source.as_str(), query_type.as_str(), passage_text, query, answer] {
            buf.extend_from_slice(part.as_bytes());
            buf.push(0x1f);
        }
        hash::stable_id(&buf)
    }
}

/// Sampling weights per query type; must sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDistribution {
    pub weights: BTreeMap<QueryType, f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistributionError {
    #[error("weights sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("negative weight for {0}")]
    Negative(QueryType),
}

impl TypeDistribution {
    pub fn new(weights: BTreeMap<QueryType, f64>) -> Result<TypeDistribution, DistributionError> {
        for (&qt, &w) in &weights {
            if w < 0.0 {
                return Err(DistributionError::Negative(qt));
            }
        }
        let sum: f64 = weights.values().sum();
        if libm::fabs(sum - 1.0) > 1e-9 {
            return Err(DistributionError::NotNormalized(sum));
        }
        Ok(TypeDistribution { weights })
    }

    pub fn weight(&self, qt: QueryType) -> f64 {
        self.weights.get(&qt).copied().unwrap_or(0.0)
    }
}

/// Weights proportional to the observed query-category counts.
pub fn default_distribution() -> TypeDistribution {
    let total: u32 = TYPE_FREQUENCIES.iter().map(|&(_, c)| c).sum();
    let weights = TYPE_FREQUENCIES
        .iter()
        .map(|&(qt, c)| (qt, c as f64 / total as f64))
        .collect();
    TypeDistribution { weights }
}

/// Largest-remainder apportionment of `n` over the distribution, in the
/// canonical type order. Quota sum is exactly `n`; each quota is within
/// one of its exact share.
pub fn apportion(n: usize, dist: &TypeDistribution) -> BTreeMap<QueryType, usize> {
    let mut quotas: Vec<(QueryType, usize, f64)> = QueryType::ALL
        .iter()
        .map(|&qt| {
            let exact = n as f64 * dist.weight(qt);
            let floor = libm::floor(exact) as usize;
            (qt, floor, exact - libm::floor(exact))
        })
        .collect();
    let assigned: usize = quotas.iter().map(|&(_, f, _)| f).sum();
    let mut remaining = n - assigned;
    // Largest fractional remainder first; ties break by larger weight,
    // then canonical order (the Vec is already in canonical order, and
    // the sort is stable).
    quotas.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| {
                dist.weight(b.0)
                    .partial_cmp(&dist.weight(a.0))
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
    });
    for q in quotas.iter_mut() {
        if remaining == 0 {
            break;
        }
        q.1 += 1;
        remaining -= 1;
    }
    quotas.into_iter().map(|(qt, f, _)| (qt, f)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("not enough {query_type} instances: need {needed}, have {available}")]
    ShortSupply { query_type: QueryType, needed: usize, available: usize },
}

/// Sample `n` instances to the target distribution: per-type quotas via
/// largest-remainder apportionment, uniform without-replacement draws
/// within each type, output order shuffled. Fully determined by `seed`.
pub fn sample(
    instances: &[TestInstance],
    n: usize,
    dist: &TypeDistribution,
    seed: u64,
) -> Result<Vec<TestInstance>, SampleError> {
    let quotas = apportion(n, dist);

    // Deterministic per-type pools ordered by id.
    let mut pools: BTreeMap<QueryType, Vec<&TestInstance>> = BTreeMap::new();
    for inst in instances {
        pools.entry(inst.query_type).or_default().push(inst);
    }
    for pool in pools.values_mut() {
        pool.sort_by(|a, b| a.id.cmp(&b.id));
    }

    for (&qt, &quota) in &quotas {
        let available = pools.get(&qt).map_or(0, Vec::len);
        if available < quota {
            return Err(SampleError::ShortSupply { query_type: qt, needed: quota, available });
        }
    }

    let mut out: Vec<TestInstance> = Vec::with_capacity(n);
    for (&qt, &quota) in &quotas {
        if quota == 0 {
            continue;
        }
        let pool = &pools[&qt];
        let mut stream = rng::seeded(hash::mix_seed(seed, qt.as_str()));
        for idx in rng::choose_indices(&mut stream, pool.len(), quota) {
            out.push(pool[idx].clone());
        }
    }
    let mut stream = rng::seeded(hash::mix_seed(seed, "order"));
    rng::shuffle(&mut stream, &mut out);
    Ok(out)
}

/// Counts by (source x query type) with row and column totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsTable {
    pub counts: BTreeMap<QueryType, BTreeMap<SourceKind, usize>>,
    pub type_totals: BTreeMap<QueryType, usize>,
    pub source_totals: BTreeMap<SourceKind, usize>,
    pub total: usize,
}

pub fn stats(dataset: &[TestInstance]) -> StatsTable {
    let mut counts: BTreeMap<QueryType, BTreeMap<SourceKind, usize>> = BTreeMap::new();
    let mut type_totals: BTreeMap<QueryType, usize> = BTreeMap::new();
    let mut source_totals: BTreeMap<SourceKind, usize> = BTreeMap::new();
    for qt in QueryType::ALL {
        let row = counts.entry(qt).or_default();
        for src in SourceKind::ALL {
            row.insert(src, 0);
        }
        type_totals.insert(qt, 0);
    }
    for src in SourceKind::ALL {
        source_totals.insert(src, 0);
    }
    for inst in dataset {
        *counts.get_mut(&inst.query_type).unwrap().get_mut(&inst.source).unwrap() += 1;
        *type_totals.get_mut(&inst.query_type).unwrap() += 1;
        *source_totals.get_mut(&inst.source).unwrap() += 1;
    }
    StatsTable { counts, type_totals, source_totals, total: dataset.len() }
}

/// Dataset version string: the ISO week of the collection window start,
/// e.g. "2023-W27".
pub fn version_string(window_start_unix: i64) -> String {
    let (y, w) = iso_week(window_start_unix);
    alloc::format!("{y}-W{w:02}")
}

/// ISO-8601 year and week number for a Unix timestamp (UTC).
fn iso_week(unix: i64) -> (i64, u32) {
    let days = unix.div_euclid(86_400);
    let (year, ordinal) = civil_from_days(days);
    // ISO weekday: Monday=1..Sunday=7. 1970-01-01 was a Thursday.
    let weekday = ((days % 7 + 7) % 7 + 4) % 7;
    let weekday = if weekday == 0 { 7 } else { weekday } as i64;
    let week = (ordinal as i64 - weekday + 10) / 7;
    if week < 1 {
        let prev = year - 1;
        return (prev, weeks_in_year(prev));
    }
    if week as u32 > weeks_in_year(year) {
        return (year + 1, 1);
    }
    (year, week as u32)
}

fn is_leap(year: i64) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

fn weeks_in_year(year: i64) -> u32 {
    // A year has 53 ISO weeks iff Jan 1 is Thursday, or it is a leap year
    // and Jan 1 is Wednesday.
    let jan1 = days_from_civil(year, 1, 1);
    let weekday = ((jan1 % 7 + 7) % 7 + 4) % 7;
    let weekday = if weekday == 0 { 7 } else { weekday };
    if weekday == 4 || (is_leap(year) && weekday == 3) {
        53
    } else {
        52
    }
}

/// (year, ordinal day 1..366) from days since the Unix epoch.
fn civil_from_days(mut days: i64) -> (i64, u32) {
    days += 719_468;
    let era = days.div_euclid(146_097);
    let doe = days.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let year = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = if month <= 2 { year + 1 } else { year };
    let jan1 = days_from_civil(year, 1, 1);
    let ordinal = (days - 719_468 - jan1 + 1) as u32;
    (year, ordinal)
}

/// Days since the Unix epoch for a civil date.
fn days_from_civil(year: i64, month: i64, day: i64) -> i64 {
    let y = if month <= 2 { year - 1 } else { year };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let doy = (153 * (if month > 2 { month - 3 } else { month + 9 }) + 2) / 5 + day - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}
