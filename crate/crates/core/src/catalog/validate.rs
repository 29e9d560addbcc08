//! Field checks for drafts. Every check runs; a report lists all failures.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::language::{LanguageCode, LanguageError, LanguageTable};
use super::model::{
    Author, AuthorDraft, BenchmarkDraft, BenchmarkResult, ContactMode, DatasetEntry, EntryDraft,
    RecordId, ResearchEntry,
};
use super::title::normalize_title;
use super::url::{canonicalize_url, CanonicalUrl, UrlError};

pub const MAX_DESCRIPTION_CHARS: usize = 2000;
pub const MIN_SCORE: f64 = 0.0;
pub const MAX_SCORE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueCode {
    Required,
    EmptyAfterNormalization,
    TooLong,
    NotIso6393Shape,
    UnknownLanguage,
    UnsupportedScheme,
    Unparseable,
    ScoreOutOfRange,
    SameLanguagePair,
    LanguageNotTagged,
    ContactRequired,
    InvalidContact,
    ContactModeMismatch,
    InvalidEmail,
    InvalidField,
    MissingRequiredField,
}

impl IssueCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            IssueCode::Required => "Required",
            IssueCode::EmptyAfterNormalization => "EmptyAfterNormalization",
            IssueCode::TooLong => "TooLong",
            IssueCode::NotIso6393Shape => "NotIso6393Shape",
            IssueCode::UnknownLanguage => "UnknownLanguage",
            IssueCode::UnsupportedScheme => "UnsupportedScheme",
            IssueCode::Unparseable => "Unparseable",
            IssueCode::ScoreOutOfRange => "ScoreOutOfRange",
            IssueCode::SameLanguagePair => "SameLanguagePair",
            IssueCode::LanguageNotTagged => "LanguageNotTagged",
            IssueCode::ContactRequired => "ContactRequired",
            IssueCode::InvalidContact => "InvalidContact",
            IssueCode::ContactModeMismatch => "ContactModeMismatch",
            IssueCode::InvalidEmail => "InvalidEmail",
            IssueCode::InvalidField => "InvalidField",
            IssueCode::MissingRequiredField => "MissingRequiredField",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&LanguageError> for IssueCode {
    fn from(e: &LanguageError) -> Self {
        match e {
            LanguageError::NotIso6393Shape(_) => IssueCode::NotIso6393Shape,
            LanguageError::UnknownLanguage(_) => IssueCode::UnknownLanguage,
        }
    }
}

impl From<&UrlError> for IssueCode {
    fn from(e: &UrlError) -> Self {
        match e {
            UrlError::UnsupportedScheme(_) => IssueCode::UnsupportedScheme,
            UrlError::Unparseable(_) => IssueCode::Unparseable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub field_path: String,
    pub code: IssueCode,
    pub message: String,
}

impl Issue {
    pub fn new(field_path: impl Into<String>, code: IssueCode, message: impl Into<String>) -> Self {
        Issue { field_path: field_path.into(), code, message: message.into() }
    }
}

/// `ok` is derived from `issues` and cannot disagree with it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn from_issues(issues: Vec<Issue>) -> Self {
        ValidationReport { issues }
    }

    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    pub fn into_issues(self) -> Vec<Issue> {
        self.issues
    }

    pub fn push(&mut self, issue: Issue) {
        self.issues.push(issue);
    }

    fn extend_prefixed(&mut self, prefix: &str, other: ValidationReport) {
        for mut issue in other.issues {
            issue.field_path = format!("{prefix}.{}", issue.field_path);
            self.issues.push(issue);
        }
    }

    pub fn has(&self, field_path: &str, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.field_path == field_path && i.code == code)
    }
}

#[derive(Serialize, Deserialize)]
struct ReportRepr {
    ok: bool,
    issues: Vec<Issue>,
}

impl Serialize for ValidationReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ReportRepr { ok: self.ok(), issues: self.issues.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ValidationReport {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ReportRepr::deserialize(deserializer)?;
        if repr.ok != repr.issues.is_empty() {
            return Err(serde::de::Error::custom("`ok` disagrees with `issues`"));
        }
        Ok(ValidationReport { issues: repr.issues })
    }
}

/// Syntactic email check: one `@`, non-empty local part, dotted domain, no whitespace.
pub fn is_valid_email(raw: &str) -> bool {
    let s = raw.trim();
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return false;
    }
    let Some((local, domain)) = s.split_once('@') else {
        return false;
    };
    !local.is_empty()
        && !domain.contains('@')
        && domain.contains('.')
        && !domain.starts_with('.')
        && !domain.ends_with('.')
        && !domain.contains("..")
}

fn is_web_contact(raw: &str) -> bool {
    canonicalize_url(raw).is_ok()
}

pub fn check_title(title: &str) -> Vec<Issue> {
    if title.trim().is_empty() {
        return vec![Issue::new("title", IssueCode::Required, "title must not be empty")];
    }
    match normalize_title(title) {
        Ok(_) => vec![],
        Err(e) => vec![Issue::new("title", IssueCode::EmptyAfterNormalization, e.to_string())],
    }
}

pub fn check_author(path: &str, author: &AuthorDraft) -> Vec<Issue> {
    let mut issues = Vec::new();
    if author.name.trim().is_empty() {
        issues.push(Issue::new(format!("{path}.name"), IssueCode::Required, "author name must not be empty"));
    }
    let contact = author.contact.as_deref().map(str::trim).filter(|c| !c.is_empty());
    match contact {
        Some(c) => {
            let email = is_valid_email(c);
            let web = is_web_contact(c);
            if !email && !web {
                issues.push(Issue::new(
                    format!("{path}.contact"),
                    IssueCode::InvalidContact,
                    "contact must be an email address or an http(s) URL",
                ));
            } else {
                let mismatch = match author.preferred_contact_mode {
                    Some(ContactMode::Email) => !email,
                    Some(ContactMode::Website) => !web,
                    _ => false,
                };
                if mismatch {
                    issues.push(Issue::new(
                        format!("{path}.preferred_contact_mode"),
                        IssueCode::ContactModeMismatch,
                        "preferred contact mode does not match the contact value",
                    ));
                }
            }
        }
        None if author.contact_permission => issues.push(Issue::new(
            format!("{path}.contact"),
            IssueCode::ContactRequired,
            "contact permission was given but no contact is present",
        )),
        None => {}
    }
    issues
}

pub fn check_authors(authors: &[AuthorDraft]) -> Vec<Issue> {
    if authors.is_empty() {
        return vec![Issue::new("authors", IssueCode::Required, "at least one author is required")];
    }
    authors
        .iter()
        .enumerate()
        .flat_map(|(i, a)| check_author(&format!("authors[{i}]"), a))
        .collect()
}

pub fn check_description(description: &str) -> Vec<Issue> {
    let len = description.chars().count();
    if len > MAX_DESCRIPTION_CHARS {
        vec![Issue::new(
            "description",
            IssueCode::TooLong,
            format!("description has {len} characters; the limit is {MAX_DESCRIPTION_CHARS}"),
        )]
    } else {
        vec![]
    }
}

pub fn check_link(path: &str, raw: &str) -> Vec<Issue> {
    if raw.trim().is_empty() {
        return vec![Issue::new(path, IssueCode::Required, "link must not be empty")];
    }
    match canonicalize_url(raw) {
        Ok(_) => vec![],
        Err(e) => vec![Issue::new(path, IssueCode::from(&e), e.to_string())],
    }
}

pub fn check_optional_link(path: &str, raw: Option<&str>) -> Vec<Issue> {
    match raw.map(str::trim).filter(|s| !s.is_empty()) {
        Some(link) => check_link(path, link),
        None => vec![],
    }
}

pub fn check_languages(languages: &[String], table: &LanguageTable) -> Vec<Issue> {
    if languages.is_empty() {
        return vec![Issue::new("languages", IssueCode::Required, "at least one language is required")];
    }
    languages
        .iter()
        .enumerate()
        .filter_map(|(i, raw)| {
            table
                .normalize(raw)
                .err()
                .map(|e| Issue::new(format!("languages[{i}]"), IssueCode::from(&e), e.to_string()))
        })
        .collect()
}

fn check_language_field(path: &str, raw: &str, table: &LanguageTable) -> Option<Issue> {
    table.normalize(raw).err().map(|e| Issue::new(path, IssueCode::from(&e), e.to_string()))
}

/// Checks one benchmark in isolation. Field paths are relative to the benchmark.
pub fn validate_benchmark(b: &BenchmarkDraft, table: &LanguageTable) -> ValidationReport {
    let mut issues = Vec::new();
    if !b.score.is_finite() || b.score < MIN_SCORE || b.score > MAX_SCORE {
        issues.push(Issue::new(
            "score",
            IssueCode::ScoreOutOfRange,
            format!("score {} is outside [{MIN_SCORE}, {MAX_SCORE}]", b.score),
        ));
    }
    let source = check_language_field("source_lang", &b.source_lang, table);
    let target = check_language_field("target_lang", &b.target_lang, table);
    if source.is_none() && target.is_none() && table.normalize(&b.source_lang) == table.normalize(&b.target_lang) {
        issues.push(Issue::new(
            "target_lang",
            IssueCode::SameLanguagePair,
            "source and target languages must differ",
        ));
    }
    issues.extend(source);
    issues.extend(target);
    issues.extend(check_optional_link("test_set_link", b.test_set_link.as_deref()));
    ValidationReport::from_issues(issues)
}

/// Cross-field rule: a benchmark's source or target must be one of the entry's languages.
pub fn check_benchmark_tagged(path: &str, b: &BenchmarkDraft, tagged: &BTreeSet<LanguageCode>, table: &LanguageTable) -> Vec<Issue> {
    let source = table.normalize(&b.source_lang).ok();
    let target = table.normalize(&b.target_lang).ok();
    let (Some(source), Some(target)) = (source, target) else {
        return vec![];
    };
    if tagged.is_empty() || tagged.contains(&source) || tagged.contains(&target) {
        return vec![];
    }
    vec![Issue::new(
        format!("{path}.source_lang"),
        IssueCode::LanguageNotTagged,
        format!("neither {source} nor {target} is among the entry's languages"),
    )]
}

pub fn validate_entry(draft: &EntryDraft, table: &LanguageTable) -> ValidationReport {
    let mut report = ValidationReport::default();
    for issue in check_title(&draft.title)
        .into_iter()
        .chain(check_authors(&draft.authors))
        .chain(check_description(&draft.description))
        .chain(check_link("link", &draft.link))
        .chain(check_languages(&draft.languages, table))
    {
        report.push(issue);
    }
    let tagged: BTreeSet<LanguageCode> = draft.languages.iter().filter_map(|l| table.normalize(l).ok()).collect();
    for (i, b) in draft.benchmarks.iter().enumerate() {
        let path = format!("benchmarks[{i}]");
        report.extend_prefixed(&path, validate_benchmark(b, table));
        for issue in check_benchmark_tagged(&path, b, &tagged, table) {
            report.push(issue);
        }
    }
    for issue in check_optional_link("test_data_link", draft.test_data_link.as_deref()) {
        report.push(issue);
    }
    report
}

fn author_from_draft(a: &AuthorDraft) -> Author {
    Author {
        name: a.name.trim().to_string(),
        contact: a.contact.as_deref().map(str::trim).filter(|c| !c.is_empty()).map(str::to_string),
        contact_permission: a.contact_permission,
        preferred_contact_mode: a.preferred_contact_mode,
    }
}

fn optional_url(raw: Option<&str>) -> Option<CanonicalUrl> {
    raw.map(str::trim).filter(|s| !s.is_empty()).and_then(|s| canonicalize_url(s).ok())
}

/// Validates `draft` and, if clean, builds a version-1 entry.
pub fn build_entry(
    id: RecordId,
    draft: &EntryDraft,
    table: &LanguageTable,
    now: DateTime<Utc>,
) -> Result<ResearchEntry, ValidationReport> {
    let report = validate_entry(draft, table);
    if !report.ok() {
        return Err(report);
    }
    let created_at = draft.created_at.unwrap_or(now);
    let languages = draft.languages.iter().filter_map(|l| table.normalize(l).ok()).collect();
    let benchmarks = draft
        .benchmarks
        .iter()
        .map(|b| BenchmarkResult {
            source_lang: table.normalize(&b.source_lang).expect("validated"),
            target_lang: table.normalize(&b.target_lang).expect("validated"),
            metric: b.metric,
            score: b.score,
            test_set_link: optional_url(b.test_set_link.as_deref()),
            evaluated_on: b.evaluated_on.unwrap_or_else(|| created_at.date_naive()),
        })
        .collect();
    Ok(ResearchEntry {
        id,
        title: draft.title.trim().to_string(),
        normalized_title: normalize_title(&draft.title).expect("validated"),
        authors: draft.authors.iter().map(author_from_draft).collect(),
        description: draft.description.trim().to_string(),
        link: canonicalize_url(&draft.link).expect("validated"),
        kind: draft.kind,
        languages,
        benchmarks,
        test_data_link: optional_url(draft.test_data_link.as_deref()),
        created_at,
        version: 1,
    })
}

/// Checks a stored entry: its draft form must validate and the derived
/// title key must be current.
pub fn validate_stored_entry(entry: &ResearchEntry, table: &LanguageTable) -> ValidationReport {
    let mut report = validate_entry(&entry.to_draft(), table);
    if normalize_title(&entry.title).ok().as_deref() != Some(entry.normalized_title.as_str()) {
        report.push(Issue::new(
            "normalized_title",
            IssueCode::InvalidField,
            "normalized_title does not match the title",
        ));
    }
    report
}

pub fn validate_dataset(dataset: &DatasetEntry, table: &LanguageTable) -> ValidationReport {
    let mut issues = Vec::new();
    if dataset.name.trim().is_empty() {
        issues.push(Issue::new("name", IssueCode::Required, "dataset name must not be empty"));
    }
    if dataset.languages.is_empty() {
        issues.push(Issue::new("languages", IssueCode::Required, "at least one language is required"));
    }
    for code in &dataset.languages {
        if !table.contains(*code) {
            issues.push(Issue::new(
                "languages",
                IssueCode::UnknownLanguage,
                format!("`{code}` is not in the language table"),
            ));
        }
    }
    issues.extend(check_description(&dataset.description));
    ValidationReport::from_issues(issues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::model::EntryKind;

    fn table() -> LanguageTable {
        LanguageTable::builtin()
    }

    fn bench(src: &str, tgt: &str, score: f64) -> BenchmarkDraft {
        BenchmarkDraft { source_lang: src.into(), target_lang: tgt.into(), score, ..Default::default() }
    }

    fn good_draft() -> EntryDraft {
        EntryDraft {
            title: "English to Fon NMT".into(),
            authors: vec![AuthorDraft { name: "Ada".into(), ..Default::default() }],
            description: "A baseline.".into(),
            link: "https://example.org/fon".into(),
            kind: EntryKind::Paper,
            languages: vec!["fon".into()],
            benchmarks: vec![bench("eng", "fon", 35.2)],
            test_data_link: None,
            created_at: None,
        }
    }

    #[test]
    fn empty_title_reported() {
        let mut d = good_draft();
        d.title = String::new();
        let r = validate_entry(&d, &table());
        assert!(!r.ok());
        assert_eq!(r.issues().len(), 1);
        assert_eq!(r.issues()[0].field_path, "title");
    }

    #[test]
    fn well_formed_draft_passes() {
        let r = validate_entry(&good_draft(), &table());
        assert!(r.ok(), "{:?}", r.issues());
        assert!(r.issues().is_empty());
    }

    #[test]
    fn benchmark_language_must_be_tagged() {
        let mut d = good_draft();
        d.languages = vec!["afr".into()];
        d.benchmarks = vec![bench("fon", "fra", 20.0)];
        let r = validate_entry(&d, &table());
        assert!(r.has("benchmarks[0].source_lang", IssueCode::LanguageNotTagged));
    }

    #[test]
    fn score_above_range() {
        let r = validate_benchmark(&bench("fon", "fra", 101.0), &table());
        assert!(!r.ok());
        assert!(r.has("score", IssueCode::ScoreOutOfRange));
    }

    #[test]
    fn zero_score_is_inclusive() {
        assert!(validate_benchmark(&bench("fon", "fra", 0.0), &table()).ok());
        assert!(validate_benchmark(&bench("fon", "fra", 100.0), &table()).ok());
        assert!(!validate_benchmark(&bench("fon", "fra", -0.5), &table()).ok());
        assert!(!validate_benchmark(&bench("fon", "fra", f64::NAN), &table()).ok());
    }

    #[test]
    fn same_pair_rejected() {
        let r = validate_benchmark(&bench("fon", "fon", 10.0), &table());
        assert!(r.has("target_lang", IssueCode::SameLanguagePair));
        let r = validate_benchmark(&bench("FON", " fon", 10.0), &table());
        assert!(r.has("target_lang", IssueCode::SameLanguagePair));
    }

    #[test]
    fn reports_every_failure() {
        let d = EntryDraft {
            title: "!!".into(),
            authors: vec![],
            description: "x".repeat(MAX_DESCRIPTION_CHARS + 1),
            link: "ftp://a.org".into(),
            languages: vec!["af".into(), "qqq".into()],
            benchmarks: vec![bench("eng", "eng", 120.0)],
            test_data_link: Some("nope".into()),
            ..Default::default()
        };
        let r = validate_entry(&d, &table());
        let got: Vec<(&str, IssueCode)> = r.issues().iter().map(|i| (i.field_path.as_str(), i.code)).collect();
        assert_eq!(
            got,
            vec![
                ("title", IssueCode::EmptyAfterNormalization),
                ("authors", IssueCode::Required),
                ("description", IssueCode::TooLong),
                ("link", IssueCode::UnsupportedScheme),
                ("languages[0]", IssueCode::NotIso6393Shape),
                ("languages[1]", IssueCode::UnknownLanguage),
                ("benchmarks[0].score", IssueCode::ScoreOutOfRange),
                ("benchmarks[0].target_lang", IssueCode::SameLanguagePair),
                ("test_data_link", IssueCode::Unparseable),
            ]
        );
    }

    #[test]
    fn description_cap_counts_characters_not_bytes() {
        let mut d = good_draft();
        d.description = "é".repeat(MAX_DESCRIPTION_CHARS);
        assert!(validate_entry(&d, &table()).ok());
    }

    #[test]
    fn permission_requires_contact() {
        let a = AuthorDraft { name: "B".into(), contact_permission: true, ..Default::default() };
        let issues = check_author("authors[0]", &a);
        assert_eq!(issues[0].code, IssueCode::ContactRequired);
        let a = AuthorDraft {
            name: "B".into(),
            contact: Some("https://b.example".into()),
            preferred_contact_mode: Some(ContactMode::Email),
            ..Default::default()
        };
        assert_eq!(check_author("a", &a)[0].code, IssueCode::ContactModeMismatch);
    }

    #[test]
    fn email_syntax() {
        assert!(is_valid_email("a@b.org"));
        assert!(is_valid_email(" x.y+z@sub.b.org "));
        for bad in ["", "a", "a@b", "@b.org", "a@@b.org", "a b@c.org", "a@b..org", "a@.org"] {
            assert!(!is_valid_email(bad), "{bad}");
        }
    }

    #[test]
    fn build_entry_normalizes_fields() {
        let mut d = good_draft();
        d.link = "HTTPS://Example.org/fon/".into();
        d.languages = vec![" FON ".into()];
        let now = Utc::now();
        let e = build_entry(RecordId::generate(now), &d, &table(), now).unwrap();
        assert_eq!(e.link.as_str(), "https://example.org/fon");
        assert_eq!(e.normalized_title, "english to fon nmt");
        assert_eq!(e.benchmarks[0].evaluated_on, now.date_naive());
        assert_eq!(e.version, 1);
        assert!(validate_stored_entry(&e, &table()).ok());
    }

    #[test]
    fn report_serialization_keeps_ok_consistent() {
        let r = validate_benchmark(&bench("fon", "fon", 1.0), &table());
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["ok"], false);
        let back: ValidationReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
        let bad = serde_json::json!({"ok": true, "issues": [{"field_path": "x", "code": "Required", "message": ""}]});
        assert!(serde_json::from_value::<ValidationReport>(bad).is_err());
    }
}
