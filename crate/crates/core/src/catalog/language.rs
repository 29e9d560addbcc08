use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The language table shipped with the crate.
pub const BUILTIN_SEED: &str = include_str!("../../data/languages.tsv");

/// Three-letter ISO 639-3 code, lowercase.
///
/// Holding a `LanguageCode` only proves the shape is right. Membership in a
/// particular [`LanguageTable`] is checked by [`LanguageTable::normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageCode([u8; 3]);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LanguageError {
    #[error("`{0}` is not a three-letter ISO 639-3 code")]
    NotIso6393Shape(String),
    #[error("`{0}` is not in the language table")]
    UnknownLanguage(String),
}

impl LanguageError {
    pub fn code(&self) -> &'static str {
        match self {
            LanguageError::NotIso6393Shape(_) => "NotIso6393Shape",
            LanguageError::UnknownLanguage(_) => "UnknownLanguage",
        }
    }
}

impl LanguageCode {
    /// Trims and lowercases `raw`, then checks it is exactly `[a-z]{3}`.
    pub fn parse_shape(raw: &str) -> Result<Self, LanguageError> {
        let lowered = raw.trim().to_lowercase();
        let bytes = lowered.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(u8::is_ascii_lowercase) {
            return Err(LanguageError::NotIso6393Shape(raw.to_string()));
        }
        Ok(LanguageCode([bytes[0], bytes[1], bytes[2]]))
    }

    pub fn as_str(&self) -> &str {
        // Only ASCII lowercase bytes are ever stored.
        std::str::from_utf8(&self.0).expect("ascii")
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LanguageCode {
    type Err = LanguageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageCode::parse_shape(s)
    }
}

impl Serialize for LanguageCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LanguageCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        LanguageCode::parse_shape(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Language {
    pub code: LanguageCode,
    pub display_name: String,
    pub alt_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeedError {
    #[error("line {line}: expected `code<TAB>display_name<TAB>alt_names`")]
    MalformedLine { line: usize },
    #[error("line {line}: {source}")]
    BadCode { line: usize, source: LanguageError },
    #[error("line {line}: empty display name")]
    EmptyDisplayName { line: usize },
    #[error("line {line}: duplicate code `{code}`")]
    DuplicateCode { line: usize, code: String },
}

/// The closed universe of languages the catalog indexes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LanguageTable {
    by_code: BTreeMap<LanguageCode, Language>,
}

impl LanguageTable {
    pub fn builtin() -> Self {
        Self::parse_seed(BUILTIN_SEED).expect("bundled language table is well-formed")
    }

    /// Parses the tab-separated seed format. Lines starting with `#` and
    /// blank lines are ignored; the alt-name column may be empty or absent.
    pub fn parse_seed(text: &str) -> Result<Self, SeedError> {
        let mut table = LanguageTable::default();
        for (idx, raw_line) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(code), Some(name)) = (cols.next(), cols.next()) else {
                return Err(SeedError::MalformedLine { line: line_no });
            };
            let alts = cols.next().unwrap_or("");
            if cols.next().is_some() {
                return Err(SeedError::MalformedLine { line: line_no });
            }
            let code = LanguageCode::parse_shape(code)
                .map_err(|source| SeedError::BadCode { line: line_no, source })?;
            let display_name = name.trim().to_string();
            if display_name.is_empty() {
                return Err(SeedError::EmptyDisplayName { line: line_no });
            }
            let alt_names = alts
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            let language = Language { code, display_name, alt_names };
            if table.by_code.insert(code, language).is_some() {
                return Err(SeedError::DuplicateCode { line: line_no, code: code.to_string() });
            }
        }
        Ok(table)
    }

    pub fn from_languages(languages: impl IntoIterator<Item = Language>) -> Result<Self, SeedError> {
        let mut table = LanguageTable::default();
        for (idx, language) in languages.into_iter().enumerate() {
            if language.display_name.trim().is_empty() {
                return Err(SeedError::EmptyDisplayName { line: idx + 1 });
            }
            let code = language.code;
            if table.by_code.insert(code, language).is_some() {
                return Err(SeedError::DuplicateCode { line: idx + 1, code: code.to_string() });
            }
        }
        Ok(table)
    }

    /// Renders the table back into the seed file format.
    pub fn to_seed(&self) -> String {
        let mut out = String::new();
        for lang in self.by_code.values() {
            out.push_str(lang.code.as_str());
            out.push('\t');
            out.push_str(&lang.display_name);
            out.push('\t');
            out.push_str(&lang.alt_names.join(";"));
            out.push('\n');
        }
        out
    }

    /// Trims, lowercases and checks `raw` against the table.
    pub fn normalize(&self, raw: &str) -> Result<LanguageCode, LanguageError> {
        let code = LanguageCode::parse_shape(raw)?;
        if self.by_code.contains_key(&code) {
            Ok(code)
        } else {
            Err(LanguageError::UnknownLanguage(code.to_string()))
        }
    }

    pub fn contains(&self, code: LanguageCode) -> bool {
        self.by_code.contains_key(&code)
    }

    pub fn get(&self, code: LanguageCode) -> Option<&Language> {
        self.by_code.get(&code)
    }

    /// Languages in code order.
    pub fn iter(&self) -> impl Iterator<Item = &Language> {
        self.by_code.values()
    }

    pub fn len(&self) -> usize {
        self.by_code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_code.is_empty()
    }

    /// Adds every language from `other` whose code is not already present.
    pub fn merge_missing(&mut self, other: &LanguageTable) {
        for lang in other.iter() {
            self.by_code.entry(lang.code).or_insert_with(|| lang.clone());
        }
    }
}
