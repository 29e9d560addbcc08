//! Bulk seeding from CSV and a BibTeX subset.
//!
//! Parsing is pure and total: any byte string yields either a
//! [`ParseError`] or a [`Parsed`] holding drafts and per-record errors.
//! [`bulk_import`] then validates each draft against the store's language
//! table and publishes it directly.

pub mod bibtex;
mod csv_records;
mod import;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{EntryDraft, Issue, IssueCode, LanguageCode};

pub use bibtex::parse_bibtex;
pub use csv_records::{parse_csv, CSV_COLUMNS, CSV_OPTIONAL_COLUMNS};
pub use import::{bulk_import, ImportPolicy, ImportReport, BULK_IMPORT_LEASE};

/// Where a record came from in its source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Locator {
    /// 1-based line where the CSV record starts.
    Line { line: u64 },
    /// 1-based BibTeX entry index and the byte offset of its `@`.
    Entry { index: usize, offset: usize, key: Option<String> },
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Locator::Line { line } => write!(f, "line {line}"),
            Locator::Entry { index, offset, key: Some(k) } => write!(f, "entry {index} `{k}` (byte {offset})"),
            Locator::Entry { index, offset, key: None } => write!(f, "entry {index} (byte {offset})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    pub locator: Locator,
    pub issues: Vec<Issue>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Parsed {
    pub drafts: Vec<(Locator, EntryDraft)>,
    pub errors: Vec<RecordError>,
}

impl Parsed {
    /// Number of input records seen, good or bad.
    pub fn record_count(&self) -> usize {
        self.drafts.len() + self.errors.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "code")]
pub enum ParseError {
    #[error("input is not UTF-8 (first bad byte at offset {valid_up_to})")]
    NotUtf8 { valid_up_to: usize },
    #[error("header row is missing required columns: {}", missing.join(", "))]
    MissingHeader { missing: Vec<String> },
    #[error("unbalanced braces starting at byte {offset}")]
    UnbalancedBraces { offset: usize },
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::NotUtf8 { .. } => "NotUtf8",
            ParseError::MissingHeader { .. } => "MissingHeader",
            ParseError::UnbalancedBraces { .. } => "UnbalancedBraces",
        }
    }
}

fn utf8(bytes: &[u8]) -> Result<&str, ParseError> {
    std::str::from_utf8(bytes).map_err(|e| ParseError::NotUtf8 { valid_up_to: e.valid_up_to() })
}

/// Shape-checks language codes so malformed tags fail at parse time.
fn shape_issues(path: &str, codes: &[String]) -> Vec<Issue> {
    codes
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            LanguageCode::parse_shape(c)
                .err()
                .map(|e| Issue::new(format!("{path}[{i}]"), IssueCode::from(&e), e.to_string()))
        })
        .collect()
}

fn split_list(raw: &str) -> Vec<String> {
    raw.split(';').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}
