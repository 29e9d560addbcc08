use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::wal::WalOp;
use super::{CatalogState, Record, Store, StoreError, StoredRecord, Write};
use crate::canonical::to_canonical_json;
use crate::catalog::{CanonicalUrl, DatasetEntry, Language, LanguageTable, RecordId, ResearchEntry, ValidationReport};
use crate::workflows::{Contribution, Recommendation};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord<T> {
    pub record: T,
    pub version: u64,
    pub updated_at: DateTime<Utc>,
}

/// Whole-catalog export. Lists are sorted by id, languages by code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogSnapshot {
    pub format_version: u32,
    pub languages: Vec<Language>,
    pub entries: Vec<SnapshotRecord<ResearchEntry>>,
    pub datasets: Vec<SnapshotRecord<DatasetEntry>>,
    pub contributions: Vec<SnapshotRecord<Contribution>>,
    pub recommendations: Vec<SnapshotRecord<Recommendation>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportMode {
    Replace,
    Merge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ImportSummary {
    pub created: usize,
    pub updated: usize,
    pub skipped: usize,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

impl CatalogSnapshot {
    pub fn to_canonical_json(&self) -> String {
        to_canonical_json(self).expect("snapshot is always representable as JSON")
    }

    /// Parses snapshot JSON, checking `format_version` before the body.
    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.format_version != FORMAT_VERSION {
            return Err(StoreError::UnsupportedFormatVersion(probe.format_version));
        }
        Ok(serde_json::from_str(text)?)
    }

    fn stored_records(&self) -> Vec<StoredRecord> {
        fn wrap<T: Clone>(items: &[SnapshotRecord<T>], f: fn(T) -> Record) -> impl Iterator<Item = StoredRecord> + '_ {
            items.iter().map(move |s| StoredRecord { payload: f(s.record.clone()), version: s.version, updated_at: s.updated_at })
        }
        let mut out: Vec<StoredRecord> = wrap(&self.entries, Record::Entry)
            .chain(wrap(&self.datasets, Record::Dataset))
            .chain(wrap(&self.contributions, Record::Contribution))
            .chain(wrap(&self.recommendations, Record::Recommendation))
            .collect();
        for stored in &mut out {
            if let Record::Entry(e) = &mut stored.payload {
                e.version = stored.version;
            }
        }
        out
    }
}

pub(crate) fn snapshot_of(state: &CatalogState) -> CatalogSnapshot {
    let mut snap = CatalogSnapshot {
        format_version: FORMAT_VERSION,
        languages: state.languages().iter().cloned().collect(),
        entries: Vec::new(),
        datasets: Vec::new(),
        contributions: Vec::new(),
        recommendations: Vec::new(),
    };
    for stored in state.records() {
        let (version, updated_at) = (stored.version, stored.updated_at);
        match &stored.payload {
            Record::Entry(r) => snap.entries.push(SnapshotRecord { record: r.clone(), version, updated_at }),
            Record::Dataset(r) => snap.datasets.push(SnapshotRecord { record: r.clone(), version, updated_at }),
            Record::Contribution(r) => snap.contributions.push(SnapshotRecord { record: r.clone(), version, updated_at }),
            Record::Recommendation(r) => {
                snap.recommendations.push(SnapshotRecord { record: r.clone(), version, updated_at })
            }
        }
    }
    snap
}

fn link_of(record: &Record) -> Option<&CanonicalUrl> {
    match record {
        Record::Entry(e) => Some(&e.link),
        Record::Dataset(d) => Some(&d.link),
        _ => None,
    }
}

fn same_content(a: &Record, b: &Record) -> bool {
    match (a, b) {
        (Record::Entry(x), Record::Entry(y)) => {
            let mut y = y.clone();
            y.version = x.version;
            *x == y
        }
        _ => a == b,
    }
}

impl Store {
    pub fn export_catalog(&self) -> CatalogSnapshot {
        snapshot_of(&self.view())
    }

    /// Replace makes the store equal to the snapshot (versions and
    /// timestamps included). Merge keeps existing records: same id updates,
    /// an unchanged record or a link already in the catalog is skipped.
    pub fn import_catalog(
        &self,
        snapshot: &CatalogSnapshot,
        mode: ImportMode,
        now: DateTime<Utc>,
    ) -> Result<ImportSummary, StoreError> {
        if snapshot.format_version != FORMAT_VERSION {
            return Err(StoreError::UnsupportedFormatVersion(snapshot.format_version));
        }
        let snap_languages = LanguageTable::from_languages(snapshot.languages.iter().cloned()).map_err(|e| {
            StoreError::SnapshotInvalid(vec![(
                RecordId::new("languages"),
                ValidationReport::from_issues(vec![crate::catalog::Issue::new(
                    "languages",
                    crate::catalog::IssueCode::InvalidField,
                    e.to_string(),
                )]),
            )])
        })?;
        let records = snapshot.stored_records();
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.payload.id().clone()) {
                return Err(StoreError::SnapshotInvalid(vec![(
                    r.payload.id().clone(),
                    ValidationReport::from_issues(vec![crate::catalog::Issue::new(
                        "id",
                        crate::catalog::IssueCode::InvalidField,
                        "duplicate id in snapshot",
                    )]),
                )]));
            }
        }

        let mut state = self.inner.state.write();
        let languages = match mode {
            ImportMode::Replace => snap_languages,
            ImportMode::Merge => {
                let mut merged = state.languages().clone();
                merged.merge_missing(&snap_languages);
                merged
            }
        };
        let failures: Vec<(RecordId, ValidationReport)> = records
            .iter()
            .map(|r| (r.payload.id().clone(), r.payload.validate(&languages)))
            .filter(|(_, rep)| !rep.ok())
            .collect();
        if !failures.is_empty() {
            return Err(StoreError::SnapshotInvalid(failures));
        }

        let mut summary = ImportSummary::default();
        let mut ops = vec![WalOp::Languages { languages: languages.iter().cloned().collect() }];
        match mode {
            ImportMode::Replace => {
                for r in &records {
                    if state.get(r.payload.id()).is_some() {
                        summary.updated += 1;
                    } else {
                        summary.created += 1;
                    }
                }
                ops.insert(0, WalOp::Clear);
                ops.extend(records.into_iter().map(WalOp::Put));
            }
            ImportMode::Merge => {
                let mut links: BTreeMap<CanonicalUrl, RecordId> = state
                    .records()
                    .filter_map(|r| link_of(&r.payload).map(|l| (l.clone(), r.payload.id().clone())))
                    .collect();
                let mut writes = Vec::new();
                for r in records {
                    let id = r.payload.id().clone();
                    match state.get(&id) {
                        Some(existing) if same_content(&existing.payload, &r.payload) => summary.skipped += 1,
                        Some(existing) => {
                            summary.updated += 1;
                            writes.push(Write::put(r.payload, Some(existing.version)));
                        }
                        None => {
                            if let Some(link) = link_of(&r.payload) {
                                if links.contains_key(link) {
                                    summary.skipped += 1;
                                    continue;
                                }
                                links.insert(link.clone(), id);
                            }
                            summary.created += 1;
                            writes.push(Write::create(r.payload));
                        }
                    }
                }
                ops.extend(state.check_and_stage(writes, now, &languages)?);
            }
        }
        self.persist(&ops)?;
        for op in &ops {
            state.apply(op);
        }
        Ok(summary)
    }
}
