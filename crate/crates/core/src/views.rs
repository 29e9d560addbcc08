//! Public projections of stored records.
//!
//! Author contact details appear only when the author granted permission.
//! Tokens, outbound mail and submitter addresses never appear.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::catalog::{
    Author, AuthorDraft, BenchmarkDraft, BenchmarkResult, CanonicalUrl, ContactMode, DatasetEntry, DuplicateReport,
    EntryDraft, EntryKind, LanguageCode, RecordId, ResearchEntry,
};
use crate::query::SearchHit;
use crate::workflows::{Contribution, ContributionState, Recommendation, RecommendationState, ReviewEvent};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorView {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_contact_mode: Option<ContactMode>,
}

impl From<&Author> for AuthorView {
    fn from(a: &Author) -> Self {
        AuthorView {
            name: a.name.clone(),
            contact: a.public_contact().map(str::to_string),
            preferred_contact_mode: if a.contact_permission { a.preferred_contact_mode } else { None },
        }
    }
}

impl From<&AuthorDraft> for AuthorView {
    fn from(a: &AuthorDraft) -> Self {
        AuthorView {
            name: a.name.clone(),
            contact: if a.contact_permission { a.contact.clone() } else { None },
            preferred_contact_mode: if a.contact_permission { a.preferred_contact_mode } else { None },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryView {
    pub id: RecordId,
    pub title: String,
    pub authors: Vec<AuthorView>,
    pub description: String,
    pub link: CanonicalUrl,
    pub kind: EntryKind,
    pub languages: Vec<LanguageCode>,
    pub benchmarks: Vec<BenchmarkResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_data_link: Option<CanonicalUrl>,
    pub created_at: DateTime<Utc>,
    pub version: u64,
}

impl From<&ResearchEntry> for EntryView {
    fn from(e: &ResearchEntry) -> Self {
        EntryView {
            id: e.id.clone(),
            title: e.title.clone(),
            authors: e.authors.iter().map(AuthorView::from).collect(),
            description: e.description.clone(),
            link: e.link.clone(),
            kind: e.kind,
            languages: e.languages.iter().copied().collect(),
            benchmarks: e.benchmarks.clone(),
            test_data_link: e.test_data_link.clone(),
            created_at: e.created_at,
            version: e.version,
        }
    }
}

pub type DatasetView = DatasetEntry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHitView {
    pub entry: EntryView,
    pub matched_fields: usize,
}

impl From<&SearchHit> for SearchHitView {
    fn from(h: &SearchHit) -> Self {
        SearchHitView { entry: EntryView::from(&h.entry), matched_fields: h.matched_fields }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftView {
    pub title: String,
    pub authors: Vec<AuthorView>,
    pub description: String,
    pub link: String,
    pub kind: EntryKind,
    pub languages: Vec<String>,
    pub benchmarks: Vec<BenchmarkDraft>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_data_link: Option<String>,
}

impl From<&EntryDraft> for DraftView {
    fn from(d: &EntryDraft) -> Self {
        DraftView {
            title: d.title.clone(),
            authors: d.authors.iter().map(AuthorView::from).collect(),
            description: d.description.clone(),
            link: d.link.clone(),
            kind: d.kind,
            languages: d.languages.clone(),
            benchmarks: d.benchmarks.clone(),
            test_data_link: d.test_data_link.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionView {
    pub id: RecordId,
    pub state: ContributionState,
    pub draft: DraftView,
    pub submitter_name: String,
    pub duplicate_report: DuplicateReport,
    pub submitted_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_recommendation: Option<RecordId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_entry: Option<RecordId>,
    pub history: Vec<ReviewEvent>,
    pub version: u64,
}

impl ContributionView {
    pub fn new(c: &Contribution, version: u64) -> Self {
        ContributionView {
            id: c.id.clone(),
            state: c.state,
            draft: DraftView::from(&c.draft),
            submitter_name: c.submitter.name.clone(),
            duplicate_report: c.duplicate_report.clone(),
            submitted_at: c.submitted_at,
            decided_at: c.decided_at,
            review_note: c.review_note.clone(),
            origin_recommendation: c.origin_recommendation.clone(),
            published_entry: c.published_entry.clone(),
            history: c.history.clone(),
            version,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationReceipt {
    pub id: RecordId,
    pub state: RecommendationState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contribution_id: Option<RecordId>,
}

impl From<&Recommendation> for RecommendationReceipt {
    fn from(r: &Recommendation) -> Self {
        RecommendationReceipt { id: r.id.clone(), state: r.state, contribution_id: r.contribution_id.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contact_dropped_without_permission() {
        let a = Author {
            name: "N".into(),
            contact: Some("n@example.org".into()),
            contact_permission: false,
            preferred_contact_mode: Some(ContactMode::Email),
        };
        let json = serde_json::to_string(&AuthorView::from(&a)).unwrap();
        assert!(!json.contains("n@example.org"));
        assert!(!json.contains("contact"));
    }

    #[test]
    fn contact_kept_with_permission() {
        let a = Author {
            name: "N".into(),
            contact: Some("https://n.example".into()),
            contact_permission: true,
            preferred_contact_mode: Some(ContactMode::Website),
        };
        let v = AuthorView::from(&a);
        assert_eq!(v.contact.as_deref(), Some("https://n.example"));
    }
}
