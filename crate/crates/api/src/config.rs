use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use mtcat_core::workflows::WorkflowConfig;

use crate::ApiConfig;

/// Keys accepted from flags, the environment and the config file.
pub const CONFIG_KEYS: [&str; 7] =
    ["BIND_ADDR", "BASE_URL", "ADMIN_TOKEN", "SMTP_URL", "DATA_PATH", "CORS_ORIGIN", "MAIL_FROM"];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} is required")]
    Missing(&'static str),
    #[error("{key}: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("config file {path}: {reason}")]
    File { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerConfig {
    pub bind_addr: SocketAddr,
    pub base_url: String,
    pub admin_token: String,
    pub smtp_url: Option<String>,
    pub data_path: PathBuf,
    pub cors_origin: Option<String>,
    pub mail_from: String,
}

impl ServerConfig {
    /// Builds a server config from a key lookup. Callers layer their
    /// sources inside `lookup` (flags, then environment, then file).
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        Self::build(lookup, true)
    }

    /// Same as [`from_lookup`](Self::from_lookup) for offline commands,
    /// where ADMIN_TOKEN may be absent (it is then empty).
    pub fn for_operator(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        Self::build(lookup, false)
    }

    fn build(lookup: impl Fn(&str) -> Option<String>, require_admin: bool) -> Result<Self, ConfigError> {
        let get = |k: &str| lookup(k).map(|v| v.trim().to_string()).filter(|v| !v.is_empty());

        let bind_raw = get("BIND_ADDR").unwrap_or_else(|| "127.0.0.1:8080".into());
        let bind_addr = bind_raw
            .parse()
            .map_err(|_| ConfigError::Invalid { key: "BIND_ADDR", reason: format!("`{bind_raw}` is not host:port") })?;

        let base_url = get("BASE_URL").unwrap_or_else(|| "http://localhost:8080".into());
        match url::Url::parse(&base_url) {
            Ok(u) if matches!(u.scheme(), "http" | "https") => {}
            _ => return Err(ConfigError::Invalid { key: "BASE_URL", reason: format!("`{base_url}` is not an http(s) URL") }),
        }

        let admin_token = match get("ADMIN_TOKEN") {
            Some(t) => t,
            None if require_admin => return Err(ConfigError::Missing("ADMIN_TOKEN")),
            None => String::new(),
        };

        let smtp_url = get("SMTP_URL");
        if let Some(s) = &smtp_url {
            if !["smtp://", "smtps://", "file://"].iter().any(|p| s.starts_with(p)) {
                return Err(ConfigError::Invalid { key: "SMTP_URL", reason: "expected smtp://, smtps:// or file://".into() });
            }
        }

        Ok(ServerConfig {
            bind_addr,
            base_url: base_url.trim_end_matches('/').to_string(),
            admin_token,
            smtp_url,
            data_path: PathBuf::from(get("DATA_PATH").unwrap_or_else(|| "./data".into())),
            cors_origin: get("CORS_ORIGIN"),
            mail_from: get("MAIL_FROM").unwrap_or_else(|| "mtcat <noreply@localhost>".into()),
        })
    }

    pub fn api_config(&self) -> ApiConfig {
        ApiConfig {
            admin_token: self.admin_token.clone(),
            workflow: WorkflowConfig::with_base_url(&self.base_url),
            cors_origin: self.cors_origin.clone(),
        }
    }
}

/// Reads a flat TOML table. Keys match [`CONFIG_KEYS`] case-insensitively;
/// unknown keys are an error so typos do not pass silently.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let err = |reason: String| ConfigError::File { path: path.display().to_string(), reason };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| err(e.message().to_string()))?;
    let mut out = BTreeMap::new();
    for (key, value) in table {
        let upper = key.to_ascii_uppercase();
        if !CONFIG_KEYS.contains(&upper.as_str()) {
            return Err(err(format!("unknown key `{key}`")));
        }
        let value = match value {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            other => return Err(err(format!("`{key}` must be a string, got {}", other.type_str()))),
        };
        out.insert(upper, value);
    }
    Ok(out)
}
