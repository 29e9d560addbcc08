use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Locator, Parsed, RecordError};
use crate::catalog::validate::build_entry;
use crate::catalog::{detect_duplicates, EntryDraft, RecordId};
use crate::store::{Record, Store, StoreError, Write};

pub const BULK_IMPORT_LEASE: &str = "bulk_import";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportPolicy {
    /// Records whose link is already catalogued are left alone.
    #[default]
    SkipDuplicates,
    /// Records whose link is already catalogued replace that entry.
    UpdateMatching,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ImportReport {
    pub created: usize,
    pub updated: usize,
    pub skipped_duplicates: usize,
    pub failed: Vec<RecordError>,
}

impl ImportReport {
    pub fn total(&self) -> usize {
        self.created + self.updated + self.skipped_duplicates + self.failed.len()
    }
}

enum Outcome {
    Created,
    Updated,
    Skipped,
    Failed(RecordError),
}

/// Validates each draft and publishes it directly, bypassing moderation.
/// Parse errors carried in `parsed` are reported as failures, so the
/// report always accounts for every input record.
pub fn bulk_import(
    store: &Store,
    parsed: Parsed,
    policy: ImportPolicy,
    now: DateTime<Utc>,
) -> Result<ImportReport, StoreError> {
    let _lease = store.try_lease(BULK_IMPORT_LEASE)?;
    let mut report = ImportReport { failed: parsed.errors, ..Default::default() };
    for (locator, draft) in parsed.drafts {
        match import_one(store, locator, &draft, policy, now)? {
            Outcome::Created => report.created += 1,
            Outcome::Updated => report.updated += 1,
            Outcome::Skipped => report.skipped_duplicates += 1,
            Outcome::Failed(e) => report.failed.push(e),
        }
    }
    Ok(report)
}

fn import_one(
    store: &Store,
    locator: Locator,
    draft: &EntryDraft,
    policy: ImportPolicy,
    now: DateTime<Utc>,
) -> Result<Outcome, StoreError> {
    let (outcome, _) = store.transact(now, |state| {
        let mut entry = match build_entry(RecordId::generate(now), draft, state.languages(), now) {
            Ok(e) => e,
            Err(report) => {
                return Ok((Outcome::Failed(RecordError { locator, issues: report.into_issues() }), vec![]));
            }
        };
        let dupes = detect_duplicates(draft, state.entries());
        let existing = dupes.exact.first().and_then(|id| state.entry(id));
        if existing.is_some() && policy == ImportPolicy::SkipDuplicates {
            return Ok((Outcome::Skipped, vec![]));
        }
        Ok::<_, StoreError>(match existing {
            Some(prev) => {
                entry.id = prev.id.clone();
                if draft.created_at.is_none() {
                    entry.created_at = prev.created_at;
                }
                let version = state.version_of(&prev.id);
                (Outcome::Updated, vec![Write::put(Record::Entry(entry), Some(version))])
            }
            None => (Outcome::Created, vec![Write::create(Record::Entry(entry))]),
        })
    })?;
    Ok(outcome)
}
