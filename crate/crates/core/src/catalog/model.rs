use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::language::LanguageCode;
use super::url::CanonicalUrl;

/// Opaque, time-sortable record identifier (26-character ULID text).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(String);

impl RecordId {
    pub fn generate(now: DateTime<Utc>) -> Self {
        let millis = now.timestamp_millis().max(0) as u64;
        let random: u128 = rand::thread_rng().gen();
        RecordId(ulid::Ulid::from_parts(millis, random).to_string())
    }

    pub fn new(raw: impl Into<String>) -> Self {
        RecordId(raw.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RecordId {
    fn from(s: &str) -> Self {
        RecordId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    Email,
    Website,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<String>,
    #[serde(default)]
    pub contact_permission: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_contact_mode: Option<ContactMode>,
}

impl Author {
    pub fn named(name: impl Into<String>) -> Self {
        Author { name: name.into(), contact: None, contact_permission: false, preferred_contact_mode: None }
    }

    /// The contact value, only if the author allowed it to be shown.
    pub fn public_contact(&self) -> Option<&str> {
        if self.contact_permission {
            self.contact.as_deref()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    #[default]
    Paper,
    ProjectOngoing,
    ProjectCompleted,
}

impl EntryKind {
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "paper" => Some(EntryKind::Paper),
            "project_ongoing" => Some(EntryKind::ProjectOngoing),
            "project_completed" => Some(EntryKind::ProjectCompleted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Metric {
    #[default]
    #[serde(rename = "BLEU")]
    Bleu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub source_lang: LanguageCode,
    pub target_lang: LanguageCode,
    pub metric: Metric,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_set_link: Option<CanonicalUrl>,
    pub evaluated_on: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearchEntry {
    pub id: RecordId,
    pub title: String,
    pub normalized_title: String,
    pub authors: Vec<Author>,
    pub description: String,
    pub link: CanonicalUrl,
    pub kind: EntryKind,
    pub languages: BTreeSet<LanguageCode>,
    pub benchmarks: Vec<BenchmarkResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_data_link: Option<CanonicalUrl>,
    pub created_at: DateTime<Utc>,
    pub version: u64,
}

impl ResearchEntry {
    pub fn to_draft(&self) -> EntryDraft {
        EntryDraft {
            title: self.title.clone(),
            authors: self.authors.iter().map(AuthorDraft::from).collect(),
            description: self.description.clone(),
            link: self.link.as_str().to_string(),
            kind: self.kind,
            languages: self.languages.iter().map(|c| c.to_string()).collect(),
            benchmarks: self.benchmarks.iter().map(BenchmarkDraft::from).collect(),
            test_data_link: self.test_data_link.as_ref().map(|u| u.as_str().to_string()),
            created_at: Some(self.created_at),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: RecordId,
    pub name: String,
    pub link: CanonicalUrl,
    pub languages: BTreeSet<LanguageCode>,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_note: Option<String>,
}

/// Unvalidated author as it arrives from a form or import file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuthorDraft {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<String>,
    #[serde(default)]
    pub contact_permission: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_contact_mode: Option<ContactMode>,
}

impl From<&Author> for AuthorDraft {
    fn from(a: &Author) -> Self {
        AuthorDraft {
            name: a.name.clone(),
            contact: a.contact.clone(),
            contact_permission: a.contact_permission,
            preferred_contact_mode: a.preferred_contact_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchmarkDraft {
    #[serde(default)]
    pub source_lang: String,
    #[serde(default)]
    pub target_lang: String,
    #[serde(default)]
    pub metric: Metric,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_set_link: Option<String>,
    /// Defaults to the entry's creation date when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluated_on: Option<NaiveDate>,
}

impl From<&BenchmarkResult> for BenchmarkDraft {
    fn from(b: &BenchmarkResult) -> Self {
        BenchmarkDraft {
            source_lang: b.source_lang.to_string(),
            target_lang: b.target_lang.to_string(),
            metric: b.metric,
            score: b.score,
            test_set_link: b.test_set_link.as_ref().map(|u| u.as_str().to_string()),
            evaluated_on: Some(b.evaluated_on),
        }
    }
}

/// A ResearchEntry-shaped record that has not been validated yet.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EntryDraft {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub authors: Vec<AuthorDraft>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub link: String,
    #[serde(default)]
    pub kind: EntryKind,
    #[serde(default)]
    pub languages: Vec<String>,
    #[serde(default)]
    pub benchmarks: Vec<BenchmarkDraft>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_data_link: Option<String>,
    /// Set by bibliographic import from the publication year.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<DateTime<Utc>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_ids_are_ulid_shaped_and_sortable() {
        let t0 = DateTime::parse_from_rfc3339("2020-02-01T00:00:00Z").unwrap().with_timezone(&Utc);
        let t1 = t0 + chrono::Duration::milliseconds(5);
        let a = RecordId::generate(t0);
        let b = RecordId::generate(t1);
        assert_eq!(a.as_str().len(), 26);
        assert!(a < b);
        assert_ne!(RecordId::generate(t0), RecordId::generate(t0));
    }

    #[test]
    fn contact_hidden_without_permission() {
        let mut a = Author::named("A");
        a.contact = Some("a@x.org".into());
        assert_eq!(a.public_contact(), None);
        a.contact_permission = true;
        assert_eq!(a.public_contact(), Some("a@x.org"));
    }

    #[test]
    fn metric_serializes_as_bleu() {
        assert_eq!(serde_json::to_string(&Metric::Bleu).unwrap(), "\"BLEU\"");
        assert_eq!(serde_json::to_string(&EntryKind::ProjectOngoing).unwrap(), "\"project_ongoing\"");
    }
}
