use std::sync::{Arc, Barrier};

use chrono::{DateTime, Duration, TimeZone, Utc};

use super::*;
use crate::catalog::validate::build_entry;
use crate::catalog::{AuthorDraft, BenchmarkDraft, EntryDraft, EntryKind, LanguageTable, RecordId, ResearchEntry};

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 1, 12, 0, 0).unwrap()
}

fn entry(n: usize, lang: &str, created: DateTime<Utc>) -> ResearchEntry {
    let draft = EntryDraft {
        title: format!("Study {n}"),
        authors: vec![AuthorDraft { name: format!("Author {n}"), ..Default::default() }],
        description: String::new(),
        link: format!("https://example.org/paper/{n}"),
        kind: EntryKind::Paper,
        languages: vec![lang.into()],
        benchmarks: vec![BenchmarkDraft {
            source_lang: "eng".into(),
            target_lang: lang.into(),
            score: 10.0 + n as f64,
            ..Default::default()
        }],
        test_data_link: None,
        created_at: Some(created),
    };
    build_entry(RecordId::new(format!("E{n:05}")), &draft, &LanguageTable::builtin(), created).unwrap()
}

fn mem() -> Store {
    Store::in_memory(LanguageTable::builtin())
}

#[test]
fn create_then_read_back() {
    let store = mem();
    let e = entry(1, "yor", t0());
    assert_eq!(store.put(Record::Entry(e.clone()), Some(0), t0()).unwrap(), 1);
    let got = store.get(&e.id).unwrap();
    assert_eq!(got.version, 1);
    match got.payload {
        Record::Entry(g) => assert_eq!(g.title, e.title),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn stale_version_is_rejected() {
    let store = mem();
    let e = entry(1, "yor", t0());
    store.put(Record::Entry(e.clone()), Some(0), t0()).unwrap();
    store.put(Record::Entry(e.clone()), Some(1), t0()).unwrap();
    let err = store.put(Record::Entry(e.clone()), Some(1), t0()).unwrap_err();
    assert!(matches!(err, StoreError::VersionConflict { expected: 1, actual: 2, .. }));
    let err = store.put(Record::Entry(e), Some(0), t0()).unwrap_err();
    assert_eq!(err.code(), "VersionConflict");
}

#[test]
fn invalid_record_never_lands() {
    let store = mem();
    let mut e = entry(1, "yor", t0());
    e.languages.clear();
    let err = store.put(Record::Entry(e.clone()), None, t0()).unwrap_err();
    assert!(matches!(err, StoreError::ValidationFailed { .. }));
    assert!(store.get(&e.id).is_err());
}

#[test]
fn batch_is_all_or_nothing() {
    let store = mem();
    let good = entry(1, "yor", t0());
    let mut bad = entry(2, "hau", t0());
    bad.title = "   ".into();
    let err = store
        .commit(vec![Write::create(Record::Entry(good.clone())), Write::create(Record::Entry(bad))], t0())
        .unwrap_err();
    assert_eq!(err.code(), "ValidationFailed");
    assert!(store.view().is_empty());
}

#[test]
fn kind_cannot_change_under_an_id() {
    let store = mem();
    let e = entry(1, "yor", t0());
    store.put(Record::Entry(e.clone()), None, t0()).unwrap();
    let d = DatasetEntry {
        id: e.id.clone(),
        name: "set".into(),
        link: crate::catalog::canonicalize_url("https://example.org/d").unwrap(),
        languages: e.languages.clone(),
        description: String::new(),
        size_note: None,
    };
    assert!(matches!(store.put(Record::Dataset(d), None, t0()), Err(StoreError::KindMismatch { .. })));
}

#[test]
fn racing_writers_with_same_expected_version_have_one_winner() {
    let store = mem();
    let e = entry(1, "yor", t0());
    store.put(Record::Entry(e.clone()), None, t0()).unwrap();
    let n = 16;
    let barrier = Arc::new(Barrier::new(n));
    let handles: Vec<_> = (0..n)
        .map(|i| {
            let store = store.clone();
            let barrier = Arc::clone(&barrier);
            let mut e = e.clone();
            std::thread::spawn(move || {
                e.description = format!("writer {i}");
                barrier.wait();
                store.put(Record::Entry(e), Some(1), t0()).is_ok()
            })
        })
        .collect();
    let wins = handles.into_iter().map(|h| h.join().unwrap()).filter(|ok| *ok).count();
    assert_eq!(wins, 1);
    assert_eq!(store.get(&e.id).unwrap().version, 2);
}

#[test]
fn delete_writes_audit_line() {
    let store = mem();
    let e = entry(1, "yor", t0());
    store.put(Record::Entry(e.clone()), None, t0()).unwrap();
    store.delete(&e.id, Some(1), t0()).unwrap();
    assert!(matches!(store.get(&e.id), Err(StoreError::NotFound(_))));
    let audit = store.audit_lines();
    assert_eq!(audit.len(), 1);
    assert!(audit[0].contains("E00001"));
    assert!(matches!(store.delete(&e.id, None, t0()), Err(StoreError::NotFound(_))));
}

#[test]
fn page_limit_is_clamped() {
    assert_eq!(PageRequest::new(0, 500).limit, MAX_PAGE_LIMIT);
    assert_eq!(PageRequest::default().limit, DEFAULT_PAGE_LIMIT);
    let page = Page::from_sorted((0..10).collect::<Vec<_>>(), PageRequest::new(8, 5));
    assert_eq!(page.items, vec![8, 9]);
    assert_eq!(page.total, 10);
}

#[test]
fn language_listing_matches_linear_scan() {
    let store = mem();
    let langs = ["yor", "hau", "ibo", "swa"];
    for n in 0..60 {
        let created = t0() + Duration::days((n * 7 % 23) as i64);
        store.put(Record::Entry(entry(n, langs[n % 4], created)), None, t0()).unwrap();
    }
    let view = store.view();
    let code = "hau".parse().unwrap();
    let mut oracle: Vec<&ResearchEntry> = view.entries().filter(|e| e.languages.contains(&code)).collect();
    oracle.sort_by(|a, b| (std::cmp::Reverse(a.created_at), &a.id).cmp(&(std::cmp::Reverse(b.created_at), &b.id)));
    let mut listed = Vec::new();
    let mut offset = 0;
    loop {
        let page = view.entries_by_language(code, None, PageRequest::new(offset, 4));
        assert_eq!(page.total, oracle.len());
        if page.items.is_empty() {
            break;
        }
        offset += page.items.len();
        listed.extend(page.items.into_iter().map(|e| e.id));
    }
    assert_eq!(listed, oracle.iter().map(|e| e.id.clone()).collect::<Vec<_>>());
}

#[test]
fn reopen_replays_log() {
    let dir = tempfile::tempdir().unwrap();
    let table = LanguageTable::builtin();
    {
        let store = Store::open(dir.path(), &table).unwrap();
        store.put(Record::Entry(entry(1, "yor", t0())), None, t0()).unwrap();
        store.put(Record::Entry(entry(2, "hau", t0())), None, t0()).unwrap();
        store.delete(&RecordId::new("E00002"), None, t0()).unwrap();
    }
    let store = Store::open(dir.path(), &table).unwrap();
    assert_eq!(store.view().len(), 1);
    assert_eq!(store.get(&RecordId::new("E00001")).unwrap().version, 1);
    assert_eq!(store.audit_lines().len(), 1);
}

#[test]
fn torn_final_line_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let table = LanguageTable::builtin();
    {
        let store = Store::open(dir.path(), &table).unwrap();
        store.put(Record::Entry(entry(1, "yor", t0())), None, t0()).unwrap();
    }
    let path = dir.path().join(WAL_FILE);
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("[{\"op\":\"put\",\"payl");
    std::fs::write(&path, text).unwrap();
    let store = Store::open(dir.path(), &table).unwrap();
    assert_eq!(store.view().len(), 1);
    store.put(Record::Entry(entry(2, "hau", t0())), None, t0()).unwrap();
    drop(store);
    assert_eq!(Store::open(dir.path(), &table).unwrap().view().len(), 2);
}

#[test]
fn second_writer_process_is_locked_out() {
    let dir = tempfile::tempdir().unwrap();
    let table = LanguageTable::builtin();
    let _first = Store::open(dir.path(), &table).unwrap();
    assert!(matches!(Store::open(dir.path(), &table), Err(StoreError::Locked(_))));
    let ro = Store::open_read_only(dir.path(), &table).unwrap();
    assert!(ro.is_read_only());
    assert!(matches!(ro.put(Record::Entry(entry(1, "yor", t0())), None, t0()), Err(StoreError::ReadOnly)));
}

#[test]
fn compaction_preserves_state() {
    let dir = tempfile::tempdir().unwrap();
    let table = LanguageTable::builtin();
    let before = {
        let store = Store::open(dir.path(), &table).unwrap();
        for n in 0..5 {
            store.put(Record::Entry(entry(n, "yor", t0())), None, t0()).unwrap();
        }
        store.delete(&RecordId::new("E00003"), None, t0()).unwrap();
        store.compact().unwrap();
        store.export_catalog()
    };
    let after = Store::open(dir.path(), &table).unwrap().export_catalog();
    assert_eq!(before, after);
}

#[test]
fn lease_is_exclusive_until_dropped() {
    let store = mem();
    let lease = store.try_lease("dispatch").unwrap();
    assert!(matches!(store.try_lease("dispatch"), Err(StoreError::LeaseHeld(_))));
    assert!(store.try_lease("bulk_import").is_ok());
    drop(lease);
    assert!(store.try_lease("dispatch").is_ok());
}

#[test]
fn shrinking_language_table_is_refused_while_in_use() {
    let store = mem();
    store.put(Record::Entry(entry(1, "yor", t0())), None, t0()).unwrap();
    let without_yor = LanguageTable::from_languages(
        LanguageTable::builtin().iter().filter(|l| l.code.as_str() != "yor").cloned(),
    )
    .unwrap();
    assert!(matches!(store.set_languages(without_yor), Err(StoreError::SnapshotInvalid(_))));
    assert!(store.view().languages().contains("yor".parse().unwrap()));
}

#[test]
fn export_import_replace_round_trip() {
    let store = mem();
    for n in 0..8 {
        store.put(Record::Entry(entry(n, ["yor", "hau"][n % 2], t0())), None, t0()).unwrap();
    }
    let mut e = entry(0, "yor", t0());
    e.description = "edited".into();
    store.put(Record::Entry(e), Some(1), t0() + Duration::hours(1)).unwrap();
    let snap = store.export_catalog();
    let json = snap.to_canonical_json();

    let other = mem();
    other.import_catalog(&CatalogSnapshot::from_json(&json).unwrap(), ImportMode::Replace, t0()).unwrap();
    assert_eq!(other.export_catalog().to_canonical_json(), json);
    assert_eq!(other.get(&RecordId::new("E00000")).unwrap().version, 2);
}

#[test]
fn merge_import_of_same_snapshot_skips_everything() {
    let store = mem();
    for n in 0..3 {
        store.put(Record::Entry(entry(n, "yor", t0())), None, t0()).unwrap();
    }
    let snap = store.export_catalog();
    let summary = store.import_catalog(&snap, ImportMode::Merge, t0()).unwrap();
    assert_eq!(summary, ImportSummary { created: 0, updated: 0, skipped: 3 });
}

#[test]
fn merge_import_skips_new_id_with_known_link() {
    let store = mem();
    store.put(Record::Entry(entry(1, "yor", t0())), None, t0()).unwrap();
    let mut snap = store.export_catalog();
    snap.entries[0].record.id = RecordId::new("OTHER");
    snap.entries.push(SnapshotRecord { record: entry(2, "hau", t0()), version: 1, updated_at: t0() });
    let summary = store.import_catalog(&snap, ImportMode::Merge, t0()).unwrap();
    assert_eq!(summary, ImportSummary { created: 1, updated: 0, skipped: 1 });
}

#[test]
fn unknown_format_version_is_refused() {
    let text = r#"{"format_version": 7, "languages": []}"#;
    assert!(matches!(CatalogSnapshot::from_json(text), Err(StoreError::UnsupportedFormatVersion(7))));
}

#[test]
fn invalid_snapshot_changes_nothing() {
    let store = mem();
    store.put(Record::Entry(entry(1, "yor", t0())), None, t0()).unwrap();
    let before = store.export_catalog();
    let mut snap = before.clone();
    let mut bad = entry(2, "hau", t0());
    bad.title.clear();
    snap.entries.push(SnapshotRecord { record: bad, version: 1, updated_at: t0() });
    for mode in [ImportMode::Replace, ImportMode::Merge] {
        assert!(matches!(store.import_catalog(&snap, mode, t0()), Err(StoreError::SnapshotInvalid(_))));
        assert_eq!(store.export_catalog(), before);
    }
}
