//! Read-side views over a single consistent store state.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CanonicalUrl, EntryKind, LanguageCode, RecordId, ResearchEntry};
use crate::store::CatalogState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("source and target languages must differ")]
    SameLanguagePair,
}

impl QueryError {
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::SameLanguagePair => "SameLanguagePair",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSummary {
    pub code: LanguageCode,
    pub display_name: String,
    pub research_count: usize,
    pub dataset_count: usize,
}

/// One row per table language, zero counts included, by display name.
pub fn language_summaries(state: &CatalogState) -> Vec<LanguageSummary> {
    let mut research: BTreeMap<LanguageCode, usize> = BTreeMap::new();
    for entry in state.entries() {
        for code in &entry.languages {
            *research.entry(*code).or_default() += 1;
        }
    }
    let mut datasets: BTreeMap<LanguageCode, usize> = BTreeMap::new();
    for dataset in state.datasets() {
        for code in &dataset.languages {
            *datasets.entry(*code).or_default() += 1;
        }
    }
    let mut rows: Vec<LanguageSummary> = state
        .languages()
        .iter()
        .map(|lang| LanguageSummary {
            code: lang.code,
            display_name: lang.display_name.clone(),
            research_count: research.get(&lang.code).copied().unwrap_or(0),
            dataset_count: datasets.get(&lang.code).copied().unwrap_or(0),
        })
        .collect();
    rows.sort_by(|a, b| a.display_name.cmp(&b.display_name).then_with(|| a.code.cmp(&b.code)));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub entry_id: RecordId,
    pub title: String,
    pub score: f64,
    pub evaluated_on: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_set_link: Option<CanonicalUrl>,
}

/// Score descending, then earlier evaluation, then entry id.
pub fn leaderboard_order(a: &LeaderboardRow, b: &LeaderboardRow) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.evaluated_on.cmp(&b.evaluated_on))
        .then_with(|| a.entry_id.cmp(&b.entry_id))
}

/// Sorts rows into leaderboard order and assigns ranks 1..n.
pub fn rank_rows(mut rows: Vec<LeaderboardRow>) -> Vec<LeaderboardRow> {
    rows.sort_by(leaderboard_order);
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    rows
}

pub fn leaderboard(
    state: &CatalogState,
    source: LanguageCode,
    target: LanguageCode,
) -> Result<Vec<LeaderboardRow>, QueryError> {
    if source == target {
        return Err(QueryError::SameLanguagePair);
    }
    let rows = state
        .entries()
        .flat_map(|entry| {
            entry
                .benchmarks
                .iter()
                .filter(|b| b.source_lang == source && b.target_lang == target)
                .map(move |b| LeaderboardRow {
                    rank: 0,
                    entry_id: entry.id.clone(),
                    title: entry.title.clone(),
                    score: b.score,
                    evaluated_on: b.evaluated_on,
                    test_set_link: b.test_set_link.clone(),
                })
        })
        .collect();
    Ok(rank_rows(rows))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSummary {
    pub source: LanguageCode,
    pub target: LanguageCode,
    pub count: usize,
}

/// Directed benchmark pairs touching `code`, with result counts.
pub fn benchmark_pairs(state: &CatalogState, code: LanguageCode) -> Vec<PairSummary> {
    let mut counts: BTreeMap<(LanguageCode, LanguageCode), usize> = BTreeMap::new();
    for entry in state.entries() {
        for b in &entry.benchmarks {
            if b.source_lang == code || b.target_lang == code {
                *counts.entry((b.source_lang, b.target_lang)).or_default() += 1;
            }
        }
    }
    counts.into_iter().map(|((source, target), count)| PairSummary { source, target, count }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub entry: ResearchEntry,
    pub matched_fields: usize,
}

fn matched_fields(entry: &ResearchEntry, needle: &str) -> usize {
    let title = entry.title.to_lowercase().contains(needle);
    let description = entry.description.to_lowercase().contains(needle);
    let author = entry.authors.iter().any(|a| a.name.to_lowercase().contains(needle));
    [title, description, author].into_iter().filter(|m| *m).count()
}

/// Case-insensitive substring search over title, description and author
/// names. Ordered by matched field count, then newest, then id. Empty text
/// lists everything that passes the filters.
pub fn search(
    state: &CatalogState,
    text: &str,
    language: Option<LanguageCode>,
    kind: Option<EntryKind>,
) -> Vec<SearchHit> {
    let needle = text.trim().to_lowercase();
    let mut hits: Vec<SearchHit> = state
        .entries()
        .filter(|e| language.is_none_or(|l| e.languages.contains(&l)))
        .filter(|e| kind.is_none_or(|k| e.kind == k))
        .filter_map(|e| {
            let matched = if needle.is_empty() { 0 } else { matched_fields(e, &needle) };
            (needle.is_empty() || matched > 0).then(|| SearchHit { entry: e.clone(), matched_fields: matched })
        })
        .collect();
    hits.sort_by(|a, b| {
        b.matched_fields
            .cmp(&a.matched_fields)
            .then_with(|| b.entry.created_at.cmp(&a.entry.created_at))
            .then_with(|| a.entry.id.cmp(&b.entry.id))
    });
    hits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatePoint {
    pub year: i32,
    pub count: usize,
}

/// Published entries per UTC calendar year of `created_at`, ascending.
/// Years without entries are omitted.
pub fn research_rate(state: &CatalogState, code: LanguageCode) -> Vec<RatePoint> {
    let mut per_year: BTreeMap<i32, usize> = BTreeMap::new();
    for entry in state.entries().filter(|e| e.languages.contains(&code)) {
        *per_year.entry(entry.created_at.year()).or_default() += 1;
    }
    per_year.into_iter().map(|(year, count)| RatePoint { year, count }).collect()
}

/// Cumulative research level per year, the prefix sum of [`research_rate`].
pub fn research_level(points: &[RatePoint]) -> Vec<RatePoint> {
    points
        .iter()
        .scan(0, |acc, p| {
            *acc += p.count;
            Some(RatePoint { year: p.year, count: *acc })
        })
        .collect()
}
