use std::collections::HashMap;

use chrono::{NaiveDate, TimeZone, Utc};

use super::{shape_issues, split_list, utf8, Locator, ParseError, Parsed, RecordError};
use crate::catalog::{AuthorDraft, BenchmarkDraft, EntryDraft, EntryKind, Issue, IssueCode};

pub const CSV_COLUMNS: [&str; 8] =
    ["title", "authors", "description", "link", "kind", "languages", "benchmarks", "test_data_link"];

/// `year` sets `created_at` to January 1 of that year, UTC.
pub const CSV_OPTIONAL_COLUMNS: [&str; 1] = ["year"];

/// Parses the catalog CSV format. Columns are matched by header name, in
/// any order; unknown columns are ignored.
pub fn parse_csv(bytes: &[u8]) -> Result<Parsed, ParseError> {
    let text = utf8(bytes)?;
    let mut reader = ::csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(Ok(h)) => h,
        _ => return Err(ParseError::MissingHeader { missing: CSV_COLUMNS.iter().map(|c| c.to_string()).collect() }),
    };
    let columns: HashMap<String, usize> =
        header.iter().enumerate().map(|(i, name)| (name.trim().trim_start_matches('\u{feff}').to_lowercase(), i)).collect();
    let missing: Vec<String> = CSV_COLUMNS.iter().filter(|c| !columns.contains_key(**c)).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        return Err(ParseError::MissingHeader { missing });
    }
    let width = header.len();

    let mut parsed = Parsed::default();
    for result in records {
        let (line, record) = match result {
            Ok(r) => (r.position().map_or(0, |p| p.line()), r),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                parsed.errors.push(RecordError {
                    locator: Locator::Line { line },
                    issues: vec![Issue::new("", IssueCode::InvalidField, e.to_string())],
                });
                continue;
            }
        };
        let locator = Locator::Line { line };
        if record.len() != width {
            parsed.errors.push(RecordError {
                locator,
                issues: vec![Issue::new(
                    "",
                    IssueCode::InvalidField,
                    format!("expected {width} fields, found {}", record.len()),
                )],
            });
            continue;
        }
        match row_to_draft(&Row { columns: &columns, record: &record }) {
            Ok(draft) => parsed.drafts.push((locator, draft)),
            Err(issues) => parsed.errors.push(RecordError { locator, issues }),
        }
    }
    Ok(parsed)
}

struct Row<'a> {
    columns: &'a HashMap<String, usize>,
    record: &'a ::csv::StringRecord,
}

impl Row<'_> {
    fn get(&self, name: &str) -> &str {
        self.columns.get(name).and_then(|i| self.record.get(*i)).unwrap_or("").trim()
    }
}

fn row_to_draft(row: &Row<'_>) -> Result<EntryDraft, Vec<Issue>> {
    let field = |name: &str| row.get(name).to_string();
    let mut issues = Vec::new();

    let mut authors = Vec::new();
    for (i, raw) in split_list(&field("authors")).iter().enumerate() {
        match parse_author(raw) {
            Some(a) => authors.push(a),
            None => issues.push(Issue::new(
                format!("authors[{i}]"),
                IssueCode::InvalidField,
                format!("`{raw}` is not `Name` or `Name <contact>`"),
            )),
        }
    }

    let kind = match row.get("kind") {
        "" => EntryKind::default(),
        raw => EntryKind::parse(raw).unwrap_or_else(|| {
            issues.push(Issue::new("kind", IssueCode::InvalidField, format!("unknown kind `{raw}`")));
            EntryKind::default()
        }),
    };

    let languages = split_list(&field("languages"));
    issues.extend(shape_issues("languages", &languages));

    let mut benchmarks = Vec::new();
    for (i, raw) in split_list(&field("benchmarks")).iter().enumerate() {
        match parse_benchmark(raw) {
            Ok(b) => benchmarks.push(b),
            Err(msg) => issues.push(Issue::new(format!("benchmarks[{i}]"), IssueCode::InvalidField, msg)),
        }
    }

    let created_at = match row.get("year") {
        "" => None,
        raw => match parse_year(raw) {
            Some(t) => Some(t),
            None => {
                issues.push(Issue::new("year", IssueCode::InvalidField, format!("`{raw}` is not a year")));
                None
            }
        },
    };

    if !issues.is_empty() {
        return Err(issues);
    }
    Ok(EntryDraft {
        title: field("title"),
        authors,
        description: field("description"),
        link: field("link"),
        kind,
        languages,
        benchmarks,
        test_data_link: Some(field("test_data_link")).filter(|s| !s.is_empty()),
        created_at,
    })
}

pub(super) fn parse_year(raw: &str) -> Option<chrono::DateTime<Utc>> {
    let year: i32 = raw.trim().parse().ok()?;
    if !(1900..=2999).contains(&year) {
        return None;
    }
    Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).single()
}

/// `Name`, `Name <contact>`, either optionally followed by `!` to grant
/// permission to show the contact.
fn parse_author(raw: &str) -> Option<AuthorDraft> {
    let (body, permission) = match raw.strip_suffix('!') {
        Some(rest) => (rest.trim_end(), true),
        None => (raw, false),
    };
    let (name, contact) = match body.find('<') {
        Some(open) => {
            let inner = body[open + 1..].strip_suffix('>')?;
            if inner.contains('<') || inner.contains('>') {
                return None;
            }
            (body[..open].trim(), Some(inner.trim().to_string()).filter(|c| !c.is_empty()))
        }
        None if body.contains('>') => return None,
        None => (body.trim(), None),
    };
    Some(AuthorDraft { name: name.to_string(), contact, contact_permission: permission, preferred_contact_mode: None })
}

/// `src-tgt:score[:test_url[:YYYY-MM-DD]]`. The URL may itself contain
/// colons, so a trailing date is recognised by shape.
fn parse_benchmark(raw: &str) -> Result<BenchmarkDraft, String> {
    let (pair, rest) = raw.split_once(':').ok_or_else(|| format!("`{raw}` has no score"))?;
    let (src, tgt) = pair.split_once('-').ok_or_else(|| format!("`{pair}` is not `src-tgt`"))?;
    let (score_raw, tail) = match rest.split_once(':') {
        Some((s, t)) => (s, Some(t)),
        None => (rest, None),
    };
    let score: f64 = score_raw.trim().parse().map_err(|_| format!("`{score_raw}` is not a number"))?;
    if !score.is_finite() {
        return Err(format!("`{score_raw}` is not a finite number"));
    }
    let (url, date) = match tail {
        None => (None, None),
        Some(t) => split_trailing_date(t)?,
    };
    Ok(BenchmarkDraft {
        source_lang: src.trim().to_string(),
        target_lang: tgt.trim().to_string(),
        score,
        test_set_link: url,
        evaluated_on: date,
        ..Default::default()
    })
}

fn split_trailing_date(tail: &str) -> Result<(Option<String>, Option<NaiveDate>), String> {
    let (url, date) = match tail.rsplit_once(':') {
        Some((u, d)) if looks_like_date(d) => (u, Some(d)),
        _ if looks_like_date(tail) => ("", Some(tail)),
        _ => (tail, None),
    };
    let date = date
        .map(|d| NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d").map_err(|_| format!("`{d}` is not a valid date")))
        .transpose()?;
    let url = Some(url.trim()).filter(|u| !u.is_empty()).map(str::to_string);
    Ok((url, date))
}

fn looks_like_date(s: &str) -> bool {
    let b = s.trim().as_bytes();
    b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter().enumerate().all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
}
