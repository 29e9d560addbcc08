use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrlError {
    #[error("unsupported URL scheme `{0}`; only http and https are accepted")]
    UnsupportedScheme(String),
    #[error("unparseable URL: {0}")]
    Unparseable(String),
}

impl UrlError {
    pub fn code(&self) -> &'static str {
        match self {
            UrlError::UnsupportedScheme(_) => "UnsupportedScheme",
            UrlError::Unparseable(_) => "Unparseable",
        }
    }
}

/// An external http(s) link in canonical form: lowercase scheme and host,
/// no fragment, no trailing slash on the path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct CanonicalUrl(String);

impl CanonicalUrl {
    pub fn parse(raw: &str) -> Result<Self, UrlError> {
        canonicalize_url(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for CanonicalUrl {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        canonicalize_url(&raw).map_err(serde::de::Error::custom)
    }
}

pub fn canonicalize_url(raw: &str) -> Result<CanonicalUrl, UrlError> {
    let trimmed = raw.trim();
    let parsed = Url::parse(trimmed).map_err(|e| match e {
        url::ParseError::RelativeUrlWithoutBase => UrlError::Unparseable(format!("{trimmed}: missing scheme")),
        other => UrlError::Unparseable(format!("{trimmed}: {other}")),
    })?;
    let scheme = parsed.scheme();
    if scheme != "http" && scheme != "https" {
        return Err(UrlError::UnsupportedScheme(scheme.to_string()));
    }
    let host = match parsed.host_str() {
        Some(h) if !h.is_empty() => h.to_lowercase(),
        _ => return Err(UrlError::Unparseable(format!("{trimmed}: empty host"))),
    };

    let mut out = String::with_capacity(trimmed.len());
    out.push_str(scheme);
    out.push_str("://");
    if !parsed.username().is_empty() {
        out.push_str(parsed.username());
        if let Some(pw) = parsed.password() {
            out.push(':');
            out.push_str(pw);
        }
        out.push('@');
    }
    out.push_str(&host);
    if let Some(port) = parsed.port() {
        out.push(':');
        out.push_str(&port.to_string());
    }
    // Every trailing slash goes, so the result is a fixed point.
    out.push_str(parsed.path().trim_end_matches('/'));
    if let Some(query) = parsed.query() {
        out.push('?');
        out.push_str(query);
    }
    Ok(CanonicalUrl(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowercases_scheme_and_host_and_drops_trailing_slash() {
        assert_eq!(
            canonicalize_url("HTTPS://Example.COM/paper/").unwrap().as_str(),
            "https://example.com/paper"
        );
    }

    #[test]
    fn strips_fragment() {
        assert_eq!(canonicalize_url("https://a.org/p#sec1").unwrap().as_str(), "https://a.org/p");
    }

    #[test]
    fn rejects_ftp() {
        assert_eq!(
            canonicalize_url("ftp://a.org/p"),
            Err(UrlError::UnsupportedScheme("ftp".into()))
        );
    }

    #[test]
    fn rejects_garbage_and_relative() {
        assert!(matches!(canonicalize_url("not a url"), Err(UrlError::Unparseable(_))));
        assert!(matches!(canonicalize_url("/relative/path"), Err(UrlError::Unparseable(_))));
        assert!(matches!(canonicalize_url("https://"), Err(UrlError::Unparseable(_))));
    }

    #[test]
    fn keeps_query_and_path_case() {
        assert_eq!(
            canonicalize_url("http://A.org/Data/Set/?split=Test&x=1#top").unwrap().as_str(),
            "http://a.org/Data/Set?split=Test&x=1"
        );
    }

    #[test]
    fn bare_host_has_no_slash() {
        assert_eq!(canonicalize_url("https://Zenodo.org/").unwrap().as_str(), "https://zenodo.org");
        assert_eq!(canonicalize_url("https://zenodo.org:8443").unwrap().as_str(), "https://zenodo.org:8443");
    }

    #[test]
    fn repeated_trailing_slashes() {
        assert_eq!(canonicalize_url("https://a.org/p//").unwrap().as_str(), "https://a.org/p");
    }

    proptest! {
        #[test]
        fn idempotent(
            scheme in prop::sample::select(vec!["http", "https", "HTTP", "Https"]),
            host in "[a-zA-Z][a-zA-Z0-9-]{0,10}(\\.[a-zA-Z]{2,5}){1,2}",
            path in "(/[a-zA-Z0-9._~%-]{0,8}){0,4}/{0,2}",
            query in proptest::option::of("[a-zA-Z0-9=&]{0,12}"),
            fragment in proptest::option::of("[a-z0-9]{0,6}"),
        ) {
            let mut raw = format!("{scheme}://{host}{path}");
            if let Some(q) = query { raw.push('?'); raw.push_str(&q); }
            if let Some(f) = fragment { raw.push('#'); raw.push_str(&f); }
            let once = canonicalize_url(&raw).unwrap();
            let twice = canonicalize_url(once.as_str()).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(!once.as_str().contains('#'));
            prop_assert!(!once.as_str().split('?').next().unwrap().ends_with('/'));
        }
    }
}
