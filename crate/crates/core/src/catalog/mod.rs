//! Record types, normalization, validation and duplicate detection.
//! Everything here is a pure function of its inputs.

pub mod dedup;
pub mod language;
pub mod model;
pub mod title;
pub mod url;
pub mod validate;

pub use dedup::{detect_duplicates, DedupKey, DuplicateReport};
pub use language::{Language, LanguageCode, LanguageError, LanguageTable};
pub use model::{
    Author, AuthorDraft, BenchmarkDraft, BenchmarkResult, ContactMode, DatasetEntry, EntryDraft, EntryKind,
    Metric, RecordId, ResearchEntry,
};
pub use title::{normalize_title, EmptyAfterNormalization};
pub use url::{canonicalize_url, CanonicalUrl, UrlError};
pub use validate::{build_entry, validate_benchmark, validate_entry, Issue, IssueCode, ValidationReport};
