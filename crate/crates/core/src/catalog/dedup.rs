use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::model::{EntryDraft, RecordId, ResearchEntry};
use super::title::normalize_title;
use super::url::{canonicalize_url, CanonicalUrl};

/// Ids of existing entries that collide with a draft. An id is in at most
/// one list; an exact link match takes precedence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DuplicateReport {
    pub exact: Vec<RecordId>,
    pub suspected: Vec<RecordId>,
}

impl DuplicateReport {
    pub fn is_empty(&self) -> bool {
        self.exact.is_empty() && self.suspected.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DedupKey {
    pub link: Option<CanonicalUrl>,
    pub normalized_title: Option<String>,
}

impl DedupKey {
    pub fn of_draft(draft: &EntryDraft) -> Self {
        DedupKey {
            link: canonicalize_url(&draft.link).ok(),
            normalized_title: normalize_title(&draft.title).ok(),
        }
    }
}

pub fn detect_duplicates<'a>(
    draft: &EntryDraft,
    existing: impl IntoIterator<Item = &'a ResearchEntry>,
) -> DuplicateReport {
    detect_duplicates_by_key(&DedupKey::of_draft(draft), existing)
}

pub fn detect_duplicates_by_key<'a>(
    key: &DedupKey,
    existing: impl IntoIterator<Item = &'a ResearchEntry>,
) -> DuplicateReport {
    let mut exact = BTreeSet::new();
    let mut suspected = BTreeSet::new();
    for entry in existing {
        if key.link.as_ref() == Some(&entry.link) {
            exact.insert(entry.id.clone());
        } else if key.normalized_title.as_deref() == Some(entry.normalized_title.as_str()) {
            suspected.insert(entry.id.clone());
        }
    }
    suspected.retain(|id| !exact.contains(id));
    DuplicateReport { exact: exact.into_iter().collect(), suspected: suspected.into_iter().collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::language::LanguageTable;
    use crate::catalog::model::AuthorDraft;
    use crate::catalog::validate::build_entry;
    use chrono::{TimeZone, Utc};

    fn entry(id: &str, title: &str, link: &str) -> ResearchEntry {
        let draft = EntryDraft {
            title: title.into(),
            authors: vec![AuthorDraft { name: "X".into(), ..Default::default() }],
            link: link.into(),
            languages: vec!["yor".into()],
            ..Default::default()
        };
        let now = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        build_entry(RecordId::new(id), &draft, &LanguageTable::builtin(), now).unwrap()
    }

    fn draft(title: &str, link: &str) -> EntryDraft {
        EntryDraft { title: title.into(), link: link.into(), ..Default::default() }
    }

    #[test]
    fn empty_catalog_has_no_duplicates() {
        let r = detect_duplicates(&draft("A", "https://a.org"), std::iter::empty());
        assert!(r.is_empty());
    }

    #[test]
    fn identical_canonical_link_is_exact() {
        let existing = vec![entry("01A", "Other", "https://a.org/p")];
        let r = detect_duplicates(&draft("Mine", "HTTPS://A.ORG/p/#x"), &existing);
        assert_eq!(r.exact, vec![RecordId::new("01A")]);
        assert!(r.suspected.is_empty());
    }

    #[test]
    fn exact_wins_over_title_match() {
        let existing = vec![entry("01A", "Same Title", "https://a.org/p"), entry("01B", "same title!", "https://b.org")];
        let r = detect_duplicates(&draft("Same  title", "https://a.org/p"), &existing);
        assert_eq!(r.exact, vec![RecordId::new("01A")]);
        assert_eq!(r.suspected, vec![RecordId::new("01B")]);
    }
}
