//! A BibTeX subset: `@article`, `@inproceedings` and `@misc` with braced,
//! quoted or bare values and `#` concatenation. `@comment`, `@preamble`
//! and `@string` blocks are skipped; macros are not expanded.

use super::csv_records::parse_year;
use super::{shape_issues, utf8, Locator, ParseError, Parsed, RecordError};
use crate::catalog::{AuthorDraft, EntryDraft, Issue, IssueCode};

pub const ENTRY_TYPES: [&str; 3] = ["article", "inproceedings", "misc"];
const SKIPPED_TYPES: [&str; 3] = ["comment", "preamble", "string"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BibEntry {
    pub entry_type: String,
    pub key: String,
    /// Lowercased field names with whitespace-collapsed values, in source order.
    pub fields: Vec<(String, String)>,
    pub offset: usize,
}

impl BibEntry {
    pub fn field(&self, name: &str) -> Option<&str> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }
}

/// Splits the input into entries. Entry-level syntax problems become
/// per-entry errors; an unterminated entry fails the whole input.
pub fn parse_entries(text: &str) -> Result<Vec<Result<BibEntry, RecordError>>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    let mut index = 0;
    while let Some(found) = text[pos..].find('@') {
        let start = pos + found;
        let mut i = start + 1;
        while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'-') {
            i += 1;
        }
        let entry_type = text[start + 1..i].to_ascii_lowercase();
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if entry_type.is_empty() || i >= bytes.len() || !matches!(bytes[i], b'{' | b'(') {
            // A stray `@` in free text between entries.
            pos = start + 1;
            continue;
        }
        let open = i;
        let close = find_close(bytes, open).ok_or(ParseError::UnbalancedBraces { offset: open })?;
        pos = close + 1;
        if SKIPPED_TYPES.contains(&entry_type.as_str()) {
            continue;
        }
        index += 1;
        let body = &text[open + 1..close];
        let result = if ENTRY_TYPES.contains(&entry_type.as_str()) {
            parse_body(body).map(|(key, fields)| BibEntry { entry_type: entry_type.clone(), key, fields, offset: start })
        } else {
            Err((None, vec![Issue::new("entry_type", IssueCode::InvalidField, format!("unsupported entry type @{entry_type}"))]))
        };
        out.push(result.map_err(|(key, issues)| RecordError { locator: Locator::Entry { index, offset: start, key }, issues }));
    }
    Ok(out)
}

/// Index of the delimiter closing the one at `open`.
fn find_close(bytes: &[u8], open: usize) -> Option<usize> {
    let paren = bytes[open] == b'(';
    let mut depth: usize = if paren { 0 } else { 1 };
    let mut in_quote = false;
    for (i, &b) in bytes.iter().enumerate().skip(open + 1) {
        match b {
            b'{' => depth += 1,
            b'}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 && !paren {
                    return Some(i);
                }
            }
            b'"' if depth == usize::from(!paren) => in_quote = !in_quote,
            b')' if paren && depth == 0 && !in_quote => return Some(i),
            _ => {}
        }
    }
    None
}

type BodyError = (Option<String>, Vec<Issue>);

fn parse_body(body: &str) -> Result<(String, Vec<(String, String)>), BodyError> {
    let (key, rest) = match body.split_once(',') {
        Some((k, r)) if !k.contains('=') => (k.trim().to_string(), r),
        Some(_) => (String::new(), body),
        None if body.contains('=') => (String::new(), body),
        None => (body.trim().to_string(), ""),
    };
    let named = Some(key.clone()).filter(|k| !k.is_empty());
    let fail = |msg: String| (named.clone(), vec![Issue::new("", IssueCode::InvalidField, msg)]);

    let b = rest.as_bytes();
    let mut i = 0;
    let mut fields: Vec<(String, String)> = Vec::new();
    loop {
        while i < b.len() && (b[i].is_ascii_whitespace() || b[i] == b',') {
            i += 1;
        }
        if i >= b.len() {
            break;
        }
        let name_start = i;
        while i < b.len() && (b[i].is_ascii_alphanumeric() || matches!(b[i], b'_' | b'-' | b':' | b'.')) {
            i += 1;
        }
        let name = rest[name_start..i].to_ascii_lowercase();
        if name.is_empty() {
            return Err(fail(format!("expected a field name near `{}`", snippet(&rest[name_start..]))));
        }
        skip_ws(b, &mut i);
        if b.get(i) != Some(&b'=') {
            return Err(fail(format!("expected `=` after field `{name}`")));
        }
        i += 1;
        let mut value = String::new();
        loop {
            skip_ws(b, &mut i);
            let piece = match b.get(i) {
                Some(b'{') => {
                    let end = matching_brace(b, i).ok_or_else(|| fail(format!("unterminated value for `{name}`")))?;
                    let v = &rest[i + 1..end];
                    i = end + 1;
                    v
                }
                Some(b'"') => {
                    let end = closing_quote(b, i).ok_or_else(|| fail(format!("unterminated quoted value for `{name}`")))?;
                    let v = &rest[i + 1..end];
                    i = end + 1;
                    v
                }
                Some(c) if c.is_ascii_alphanumeric() => {
                    let s = i;
                    while i < b.len() && (b[i].is_ascii_alphanumeric() || matches!(b[i], b'_' | b'-' | b':' | b'.')) {
                        i += 1;
                    }
                    &rest[s..i]
                }
                _ => return Err(fail(format!("missing value for `{name}`"))),
            };
            value.push_str(piece);
            skip_ws(b, &mut i);
            if b.get(i) == Some(&b'#') {
                i += 1;
            } else {
                break;
            }
        }
        if i < b.len() && b[i] != b',' {
            return Err(fail(format!("expected `,` after field `{name}`")));
        }
        if !fields.iter().any(|(n, _)| *n == name) {
            fields.push((name, collapse_ws(&value)));
        }
    }
    Ok((key, fields))
}

fn skip_ws(b: &[u8], i: &mut usize) {
    while *i < b.len() && b[*i].is_ascii_whitespace() {
        *i += 1;
    }
}

fn matching_brace(b: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, &c) in b.iter().enumerate().skip(open) {
        match c {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// A `"` at brace depth zero ends a quoted value.
fn closing_quote(b: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, &c) in b.iter().enumerate().skip(open + 1) {
        match c {
            b'{' => depth += 1,
            b'}' => depth = depth.checked_sub(1)?,
            b'"' if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn snippet(s: &str) -> String {
    s.chars().take(20).collect()
}

/// Splits an `author` value on ` and ` outside braces.
pub fn split_authors(raw: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    let words: Vec<&str> = raw.split(' ').collect();
    for word in words {
        if depth == 0 && word == "and" {
            names.push(std::mem::take(&mut current));
            continue;
        }
        for c in word.chars() {
            match c {
                '{' => depth += 1,
                '}' => depth = depth.saturating_sub(1),
                _ => {}
            }
        }
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(word);
    }
    names.push(current);
    names.into_iter().map(|n| strip_outer_braces(n.trim()).to_string()).filter(|n| !n.is_empty()).collect()
}

fn strip_outer_braces(s: &str) -> &str {
    match s.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
        Some(inner) if matching_brace(s.as_bytes(), 0) == Some(s.len() - 1) => inner.trim(),
        _ => s,
    }
}

/// `lang:xyz` tags from a comma- or semicolon-separated `keywords` value.
pub fn language_tags(keywords: &str) -> Vec<String> {
    keywords
        .split([',', ';'])
        .map(str::trim)
        .filter_map(|k| k.get(..5).filter(|p| p.eq_ignore_ascii_case("lang:")).map(|_| k[5..].trim().to_string()))
        .collect()
}

pub fn entry_to_draft(entry: &BibEntry) -> Result<EntryDraft, Vec<Issue>> {
    let mut issues = Vec::new();
    let title = entry.field("title").unwrap_or("").trim();
    if title.is_empty() {
        issues.push(Issue::new("title", IssueCode::MissingRequiredField, "entry has no title"));
    }
    let url = entry.field("url").unwrap_or("").trim();
    if url.is_empty() {
        issues.push(Issue::new("url", IssueCode::MissingRequiredField, "entry has no url"));
    }
    let languages = entry.field("keywords").map(language_tags).unwrap_or_default();
    issues.extend(shape_issues("languages", &languages));
    let created_at = match entry.field("year") {
        None => None,
        Some(raw) => {
            let parsed = parse_year(raw);
            if parsed.is_none() {
                issues.push(Issue::new("year", IssueCode::InvalidField, format!("`{raw}` is not a year")));
            }
            parsed
        }
    };
    if !issues.is_empty() {
        return Err(issues);
    }
    Ok(EntryDraft {
        title: title.to_string(),
        authors: entry
            .field("author")
            .map(split_authors)
            .unwrap_or_default()
            .into_iter()
            .map(|name| AuthorDraft { name, ..Default::default() })
            .collect(),
        description: entry.field("abstract").unwrap_or("").to_string(),
        link: url.to_string(),
        languages,
        created_at,
        ..Default::default()
    })
}

pub fn parse_bibtex(bytes: &[u8]) -> Result<Parsed, ParseError> {
    let text = utf8(bytes)?;
    let mut parsed = Parsed::default();
    for (n, result) in parse_entries(text)?.into_iter().enumerate() {
        match result {
            Ok(entry) => {
                let locator = Locator::Entry {
                    index: n + 1,
                    offset: entry.offset,
                    key: Some(entry.key.clone()).filter(|k| !k.is_empty()),
                };
                match entry_to_draft(&entry) {
                    Ok(draft) => parsed.drafts.push((locator, draft)),
                    Err(issues) => parsed.errors.push(RecordError { locator, issues }),
                }
            }
            Err(e) => parsed.errors.push(e),
        }
    }
    Ok(parsed)
}
