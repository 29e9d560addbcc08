//! Versioned record store.
//!
//! All writes go through [`Store::transact`], which runs a closure against
//! the committed state under the write lock, checks expected versions and
//! record validity, appends the batch to the write-ahead log, and only then
//! makes it visible. Readers take a shared lock and never observe a partial
//! batch.
//!
//! A file-backed store keeps a directory with `catalog.wal` (one JSON batch
//! per line), `audit.log` and a `lock` file held with an exclusive advisory
//! lock for the life of the handle.

mod snapshot;
mod wal;

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock, RwLockReadGuard};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::validate::{validate_dataset, validate_stored_entry};
use crate::catalog::{
    DatasetEntry, EntryKind, LanguageCode, LanguageTable, RecordId, ResearchEntry, ValidationReport,
};
use crate::workflows::{Contribution, Recommendation};

pub use snapshot::{CatalogSnapshot, ImportMode, ImportSummary, SnapshotRecord, FORMAT_VERSION};
use wal::{Wal, WalOp};

pub const MAX_PAGE_LIMIT: usize = 100;
pub const DEFAULT_PAGE_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Entry,
    Dataset,
    Contribution,
    Recommendation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "record", rename_all = "snake_case")]
pub enum Record {
    Entry(ResearchEntry),
    Dataset(DatasetEntry),
    Contribution(Contribution),
    Recommendation(Recommendation),
}

impl Record {
    pub fn id(&self) -> &RecordId {
        match self {
            Record::Entry(r) => &r.id,
            Record::Dataset(r) => &r.id,
            Record::Contribution(r) => &r.id,
            Record::Recommendation(r) => &r.id,
        }
    }

    pub fn kind(&self) -> RecordKind {
        match self {
            Record::Entry(_) => RecordKind::Entry,
            Record::Dataset(_) => RecordKind::Dataset,
            Record::Contribution(_) => RecordKind::Contribution,
            Record::Recommendation(_) => RecordKind::Recommendation,
        }
    }

    fn validate(&self, languages: &LanguageTable) -> ValidationReport {
        match self {
            Record::Entry(e) => validate_stored_entry(e, languages),
            Record::Dataset(d) => validate_dataset(d, languages),
            Record::Contribution(c) => c.validate_shape(),
            Record::Recommendation(r) => r.validate_shape(languages),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub payload: Record,
    pub version: u64,
    pub updated_at: DateTime<Utc>,
}

/// One write in a batch. `expected_version: Some(0)` means "must not exist".
#[derive(Debug, Clone, PartialEq)]
pub enum Write {
    Put { record: Record, expected_version: Option<u64> },
    Delete { id: RecordId, expected_version: Option<u64> },
}

impl Write {
    pub fn put(record: Record, expected_version: Option<u64>) -> Self {
        Write::Put { record, expected_version }
    }

    pub fn create(record: Record) -> Self {
        Write::Put { record, expected_version: Some(0) }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("version conflict on {id}: expected {expected}, found {actual}")]
    VersionConflict { id: RecordId, expected: u64, actual: u64 },
    #[error("record {id} failed validation")]
    ValidationFailed { id: RecordId, report: ValidationReport },
    #[error("record {0} not found")]
    NotFound(RecordId),
    #[error("record {id} is a {existing:?}, not a {attempted:?}")]
    KindMismatch { id: RecordId, existing: RecordKind, attempted: RecordKind },
    #[error("lease `{0}` is held by another operation")]
    LeaseHeld(String),
    #[error("data path {0} is locked by another process")]
    Locked(PathBuf),
    #[error("store was opened read-only")]
    ReadOnly,
    #[error("unsupported snapshot format_version {0}")]
    UnsupportedFormatVersion(u32),
    #[error("snapshot failed validation ({} records)", .0.len())]
    SnapshotInvalid(Vec<(RecordId, ValidationReport)>),
    #[error("corrupt log at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::VersionConflict { .. } => "VersionConflict",
            StoreError::ValidationFailed { .. } | StoreError::SnapshotInvalid(_) => "ValidationFailed",
            StoreError::NotFound(_) => "NotFound",
            StoreError::KindMismatch { .. } => "KindMismatch",
            StoreError::LeaseHeld(_) => "LeaseHeld",
            StoreError::Locked(_) => "StoreLocked",
            StoreError::ReadOnly => "ReadOnly",
            StoreError::UnsupportedFormatVersion(_) => "UnsupportedFormatVersion",
            StoreError::Corrupt { .. } => "StoreCorrupt",
            StoreError::Serde(_) | StoreError::Io(_) => "StorageError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PageRequest {
    pub offset: usize,
    pub limit: usize,
}

impl Default for PageRequest {
    fn default() -> Self {
        PageRequest { offset: 0, limit: DEFAULT_PAGE_LIMIT }
    }
}

impl PageRequest {
    /// Limits above the cap are clamped to it.
    pub fn new(offset: usize, limit: usize) -> Self {
        PageRequest { offset, limit: limit.min(MAX_PAGE_LIMIT) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
}

impl<T> Page<T> {
    pub fn from_sorted(all: Vec<T>, page: PageRequest) -> Self {
        let total = all.len();
        let items = all.into_iter().skip(page.offset).take(page.limit).collect();
        Page { items, total, offset: page.offset, limit: page.limit }
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> Page<U> {
        Page { items: self.items.into_iter().map(f).collect(), total: self.total, offset: self.offset, limit: self.limit }
    }
}

/// Committed catalog contents as seen by one reader or transaction.
#[derive(Debug, Clone, Default)]
pub struct CatalogState {
    records: BTreeMap<RecordId, StoredRecord>,
    languages: LanguageTable,
}

impl CatalogState {
    pub fn languages(&self) -> &LanguageTable {
        &self.languages
    }

    pub fn get(&self, id: &RecordId) -> Option<&StoredRecord> {
        self.records.get(id)
    }

    pub fn version_of(&self, id: &RecordId) -> u64 {
        self.records.get(id).map_or(0, |r| r.version)
    }

    pub fn records(&self) -> impl Iterator<Item = &StoredRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Published research entries, in id order.
    pub fn entries(&self) -> impl Iterator<Item = &ResearchEntry> {
        self.records.values().filter_map(|r| match &r.payload {
            Record::Entry(e) => Some(e),
            _ => None,
        })
    }

    pub fn datasets(&self) -> impl Iterator<Item = &DatasetEntry> {
        self.records.values().filter_map(|r| match &r.payload {
            Record::Dataset(d) => Some(d),
            _ => None,
        })
    }

    pub fn contributions(&self) -> impl Iterator<Item = (&Contribution, u64)> {
        self.records.values().filter_map(|r| match &r.payload {
            Record::Contribution(c) => Some((c, r.version)),
            _ => None,
        })
    }

    pub fn recommendations(&self) -> impl Iterator<Item = (&Recommendation, u64)> {
        self.records.values().filter_map(|r| match &r.payload {
            Record::Recommendation(c) => Some((c, r.version)),
            _ => None,
        })
    }

    pub fn entry(&self, id: &RecordId) -> Option<&ResearchEntry> {
        match self.records.get(id).map(|r| &r.payload) {
            Some(Record::Entry(e)) => Some(e),
            _ => None,
        }
    }

    pub fn contribution(&self, id: &RecordId) -> Option<(&Contribution, u64)> {
        self.records.get(id).and_then(|r| match &r.payload {
            Record::Contribution(c) => Some((c, r.version)),
            _ => None,
        })
    }

    pub fn recommendation(&self, id: &RecordId) -> Option<(&Recommendation, u64)> {
        self.records.get(id).and_then(|r| match &r.payload {
            Record::Recommendation(c) => Some((c, r.version)),
            _ => None,
        })
    }

    /// Research entries tagged with `code`, newest first, then id ascending.
    pub fn entries_by_language(
        &self,
        code: LanguageCode,
        kind: Option<EntryKind>,
        page: PageRequest,
    ) -> Page<ResearchEntry> {
        let mut matches: Vec<&ResearchEntry> = self
            .entries()
            .filter(|e| e.languages.contains(&code))
            .filter(|e| kind.is_none_or(|k| e.kind == k))
            .collect();
        matches.sort_by(|a, b| b.created_at.cmp(&a.created_at).then_with(|| a.id.cmp(&b.id)));
        Page::from_sorted(matches.into_iter().cloned().collect(), page)
    }

    /// Datasets tagged with `code`, in id order.
    pub fn datasets_by_language(&self, code: LanguageCode, page: PageRequest) -> Page<DatasetEntry> {
        let matches = self.datasets().filter(|d| d.languages.contains(&code)).cloned().collect();
        Page::from_sorted(matches, page)
    }

    fn check_and_stage(
        &self,
        writes: Vec<Write>,
        now: DateTime<Utc>,
        languages: &LanguageTable,
    ) -> Result<Vec<WalOp>, StoreError> {
        let mut staged: BTreeMap<RecordId, Option<StoredRecord>> = BTreeMap::new();
        let mut ops = Vec::with_capacity(writes.len());
        for write in writes {
            match write {
                Write::Put { record, expected_version } => {
                    let id = record.id().clone();
                    let current = match staged.get(&id) {
                        Some(s) => s.as_ref(),
                        None => self.records.get(&id),
                    };
                    let actual = current.map_or(0, |r| r.version);
                    if let Some(expected) = expected_version {
                        if expected != actual {
                            return Err(StoreError::VersionConflict { id, expected, actual });
                        }
                    }
                    if let Some(existing) = current {
                        if existing.payload.kind() != record.kind() {
                            return Err(StoreError::KindMismatch {
                                id,
                                existing: existing.payload.kind(),
                                attempted: record.kind(),
                            });
                        }
                    }
                    let version = actual + 1;
                    let updated_at = current.map_or(now, |r| r.updated_at.max(now));
                    let mut record = record;
                    if let Record::Entry(e) = &mut record {
                        e.version = version;
                    }
                    let report = record.validate(languages);
                    if !report.ok() {
                        return Err(StoreError::ValidationFailed { id, report });
                    }
                    let stored = StoredRecord { payload: record, version, updated_at };
                    staged.insert(id, Some(stored.clone()));
                    ops.push(WalOp::Put(stored));
                }
                Write::Delete { id, expected_version } => {
                    let current = match staged.get(&id) {
                        Some(s) => s.as_ref(),
                        None => self.records.get(&id),
                    };
                    let Some(current) = current else {
                        return Err(StoreError::NotFound(id));
                    };
                    if let Some(expected) = expected_version {
                        if expected != current.version {
                            return Err(StoreError::VersionConflict { id, expected, actual: current.version });
                        }
                    }
                    staged.insert(id.clone(), None);
                    ops.push(WalOp::Delete { id });
                }
            }
        }
        Ok(ops)
    }

    fn apply(&mut self, op: &WalOp) {
        match op {
            WalOp::Put(stored) => {
                self.records.insert(stored.payload.id().clone(), stored.clone());
            }
            WalOp::Delete { id } => {
                self.records.remove(id);
            }
            WalOp::Clear => self.records.clear(),
            WalOp::Languages { languages: langs } => {
                self.languages = LanguageTable::from_languages(langs.iter().cloned()).unwrap_or_default();
            }
        }
    }
}

enum Backend {
    Memory { audit: Mutex<Vec<String>> },
    File { wal: Mutex<Wal>, audit_path: PathBuf, _lock: File },
    ReadOnly,
}

/// Cheap to clone; clones share state.
#[derive(Clone)]
pub struct Store {
    inner: Arc<Inner>,
}

struct Inner {
    state: RwLock<CatalogState>,
    backend: Backend,
    leases: Mutex<HashSet<String>>,
}

/// Released on drop.
pub struct Lease {
    inner: Arc<Inner>,
    name: String,
}

impl Drop for Lease {
    fn drop(&mut self) {
        self.inner.leases.lock().remove(&self.name);
    }
}

pub const WAL_FILE: &str = "catalog.wal";
pub const AUDIT_FILE: &str = "audit.log";
pub const LOCK_FILE: &str = "lock";

impl Store {
    pub fn in_memory(languages: LanguageTable) -> Self {
        Store::from_parts(CatalogState { records: BTreeMap::new(), languages }, Backend::Memory { audit: Mutex::new(Vec::new()) })
    }

    /// Opens (creating if needed) the store in directory `dir`, taking an
    /// exclusive lock. A brand-new store starts with `seed_languages`.
    pub fn open(dir: &Path, seed_languages: &LanguageTable) -> Result<Self, StoreError> {
        std::fs::create_dir_all(dir)?;
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(dir.join(LOCK_FILE))?;
        match fs4::fs_std::FileExt::try_lock_exclusive(&lock) {
            Ok(true) => {}
            Ok(false) => return Err(StoreError::Locked(dir.to_path_buf())),
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => return Err(StoreError::Locked(dir.to_path_buf())),
            Err(e) => return Err(StoreError::Io(e)),
        }
        let (mut wal, ops) = Wal::open(&dir.join(WAL_FILE))?;
        let mut state = CatalogState::default();
        if ops.is_empty() {
            let init = vec![WalOp::Languages { languages: seed_languages.iter().cloned().collect() }];
            wal.append(&init)?;
            state.apply(&init[0]);
        }
        for op in &ops {
            state.apply(op);
        }
        Ok(Store::from_parts(state, Backend::File { wal: Mutex::new(wal), audit_path: dir.join(AUDIT_FILE), _lock: lock }))
    }

    /// Replays the log without locking. Writes are refused.
    pub fn open_read_only(dir: &Path, seed_languages: &LanguageTable) -> Result<Self, StoreError> {
        let ops = Wal::read(&dir.join(WAL_FILE))?;
        let mut state = CatalogState { records: BTreeMap::new(), languages: seed_languages.clone() };
        for op in &ops {
            state.apply(op);
        }
        Ok(Store::from_parts(state, Backend::ReadOnly))
    }

    fn from_parts(state: CatalogState, backend: Backend) -> Self {
        Store { inner: Arc::new(Inner { state: RwLock::new(state), backend, leases: Mutex::new(HashSet::new()) }) }
    }

    /// Shared read access to a consistent committed state.
    pub fn view(&self) -> RwLockReadGuard<'_, CatalogState> {
        self.inner.state.read()
    }

    pub fn get(&self, id: &RecordId) -> Result<StoredRecord, StoreError> {
        self.view().get(id).cloned().ok_or_else(|| StoreError::NotFound(id.clone()))
    }

    /// Writes one record; returns its new version.
    pub fn put(&self, record: Record, expected_version: Option<u64>, now: DateTime<Utc>) -> Result<u64, StoreError> {
        let versions = self.commit(vec![Write::Put { record, expected_version }], now)?;
        Ok(versions[0])
    }

    pub fn delete(&self, id: &RecordId, expected_version: Option<u64>, now: DateTime<Utc>) -> Result<(), StoreError> {
        self.commit(vec![Write::Delete { id: id.clone(), expected_version }], now).map(|_| ())
    }

    /// Applies `writes` atomically. Returns the new version of each put
    /// (0 for deletes), in order.
    pub fn commit(&self, writes: Vec<Write>, now: DateTime<Utc>) -> Result<Vec<u64>, StoreError> {
        self.transact(now, |_| Ok::<_, StoreError>(((), writes))).map(|(_, v)| v)
    }

    /// Runs `f` against the committed state under the write lock and commits
    /// the writes it returns as one atomic batch.
    pub fn transact<T, E>(
        &self,
        now: DateTime<Utc>,
        f: impl FnOnce(&CatalogState) -> Result<(T, Vec<Write>), E>,
    ) -> Result<(T, Vec<u64>), E>
    where
        E: From<StoreError>,
    {
        let mut state = self.inner.state.write();
        let (value, writes) = f(&state)?;
        if writes.is_empty() {
            return Ok((value, Vec::new()));
        }
        let deletes: Vec<(RecordId, RecordKind, u64)> = writes
            .iter()
            .filter_map(|w| match w {
                Write::Delete { id, .. } => state.get(id).map(|r| (id.clone(), r.payload.kind(), r.version)),
                _ => None,
            })
            .collect();
        let ops = state.check_and_stage(writes, now, state.languages())?;
        self.persist(&ops)?;
        let versions = ops
            .iter()
            .map(|op| match op {
                WalOp::Put(s) => s.version,
                _ => 0,
            })
            .collect();
        for op in &ops {
            state.apply(op);
        }
        drop(state);
        for (id, kind, version) in deletes {
            self.audit(&format!("{} delete {id} kind={kind:?} version={version}", now.to_rfc3339()))?;
        }
        Ok((value, versions))
    }

    fn persist(&self, ops: &[WalOp]) -> Result<(), StoreError> {
        match &self.inner.backend {
            Backend::Memory { .. } => Ok(()),
            Backend::File { wal, .. } => wal.lock().append(ops),
            Backend::ReadOnly => Err(StoreError::ReadOnly),
        }
    }

    fn audit(&self, line: &str) -> Result<(), StoreError> {
        log::info!("audit: {line}");
        match &self.inner.backend {
            Backend::Memory { audit } => audit.lock().push(line.to_string()),
            Backend::File { audit_path, .. } => {
                let mut f = OpenOptions::new().create(true).append(true).open(audit_path)?;
                writeln!(f, "{line}")?;
                f.sync_data()?;
            }
            Backend::ReadOnly => {}
        }
        Ok(())
    }

    /// Audit lines recorded by an in-memory store (deletions).
    pub fn audit_lines(&self) -> Vec<String> {
        match &self.inner.backend {
            Backend::Memory { audit } => audit.lock().clone(),
            Backend::File { audit_path, .. } => std::fs::read_to_string(audit_path)
                .map(|s| s.lines().map(str::to_string).collect())
                .unwrap_or_default(),
            Backend::ReadOnly => Vec::new(),
        }
    }

    /// Replaces the language table. Existing records are revalidated and
    /// the change is refused if any would become invalid.
    pub fn set_languages(&self, languages: LanguageTable) -> Result<(), StoreError> {
        let mut state = self.inner.state.write();
        let failures: Vec<(RecordId, ValidationReport)> = state
            .records()
            .map(|r| (r.payload.id().clone(), r.payload.validate(&languages)))
            .filter(|(_, rep)| !rep.ok())
            .collect();
        if !failures.is_empty() {
            return Err(StoreError::SnapshotInvalid(failures));
        }
        let op = WalOp::Languages { languages: languages.iter().cloned().collect() };
        self.persist(std::slice::from_ref(&op))?;
        state.apply(&op);
        Ok(())
    }

    /// Rewrites the log as a single batch holding the current state.
    pub fn compact(&self) -> Result<(), StoreError> {
        let state = self.inner.state.read();
        match &self.inner.backend {
            Backend::File { wal, .. } => {
                let mut ops = vec![WalOp::Languages { languages: state.languages.iter().cloned().collect() }];
                ops.extend(state.records.values().cloned().map(WalOp::Put));
                wal.lock().rewrite(&ops)
            }
            Backend::Memory { .. } => Ok(()),
            Backend::ReadOnly => Err(StoreError::ReadOnly),
        }
    }

    /// Named in-process mutual exclusion (dispatcher, bulk import).
    pub fn try_lease(&self, name: &str) -> Result<Lease, StoreError> {
        let mut leases = self.inner.leases.lock();
        if !leases.insert(name.to_string()) {
            return Err(StoreError::LeaseHeld(name.to_string()));
        }
        Ok(Lease { inner: Arc::clone(&self.inner), name: name.to_string() })
    }

    pub fn is_read_only(&self) -> bool {
        matches!(self.inner.backend, Backend::ReadOnly)
    }
}

#[cfg(test)]
mod tests;
