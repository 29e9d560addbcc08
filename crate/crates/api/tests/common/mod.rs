#![allow(dead_code)]

use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration, TimeZone, Utc};
use http_body_util::BodyExt;
use mtcat_api::{router, ApiConfig, AppState};
use mtcat_core::catalog::LanguageTable;
use mtcat_core::store::Store;
use mtcat_core::workflows::WorkflowConfig;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const ADMIN: &str = "s3cret-admin";

pub struct Harness {
    pub store: Store,
    pub app: Router,
    pub config: WorkflowConfig,
    clock: Arc<Mutex<DateTime<Utc>>>,
}

pub struct Reply {
    pub status: StatusCode,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.text))
    }
}

impl Harness {
    pub fn new() -> Self {
        Self::with_store(Store::in_memory(LanguageTable::builtin()))
    }

    pub fn with_store(store: Store) -> Self {
        let clock = Arc::new(Mutex::new(Utc.with_ymd_and_hms(2024, 3, 1, 12, 0, 0).unwrap()));
        let config = WorkflowConfig::with_base_url("https://mt.example.org");
        let api = ApiConfig { admin_token: ADMIN.into(), workflow: config.clone(), cors_origin: Some("*".into()) };
        let c = clock.clone();
        let state = AppState::with_clock(store.clone(), api, Arc::new(move || *c.lock().unwrap()));
        Harness { store, app: router(state), config, clock }
    }

    pub fn now(&self) -> DateTime<Utc> {
        *self.clock.lock().unwrap()
    }

    pub fn advance(&self, by: Duration) {
        *self.clock.lock().unwrap() += by;
    }

    pub async fn call(&self, method: &str, path: &str, body: Option<&str>, auth: Option<&str>) -> Reply {
        let mut req = Request::builder().method(method).uri(path);
        if body.is_some() {
            req = req.header("content-type", "application/json");
        }
        if let Some(token) = auth {
            req = req.header("authorization", format!("Bearer {token}"));
        }
        let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty)).unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        Reply { status, text: String::from_utf8(bytes.to_vec()).unwrap() }
    }

    pub async fn get(&self, path: &str) -> Reply {
        self.call("GET", path, None, None).await
    }

    pub async fn post(&self, path: &str, body: &Value) -> Reply {
        self.call("POST", path, Some(&body.to_string()), None).await
    }

    pub async fn admin_get(&self, path: &str) -> Reply {
        self.call("GET", path, None, Some(ADMIN)).await
    }

    pub async fn admin_post(&self, path: &str, body: &Value) -> Reply {
        self.call("POST", path, Some(&body.to_string()), Some(ADMIN)).await
    }

    /// Submits, takes and approves; returns the contribution id.
    pub async fn publish(&self, form: &Value) -> String {
        let r = self.post("/api/v1/contributions", form).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
        let id = r.json()["id"].as_str().unwrap().to_string();
        let r = self.admin_post(&format!("/api/v1/moderation/{id}/take"), &json!({})).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
        let r = self.admin_post(&format!("/api/v1/moderation/{id}/decision"), &json!({"decision": "approve"})).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
        id
    }
}

pub fn form(title: &str, link: &str, languages: &[&str], benchmarks: Value) -> Value {
    json!({
        "title": title,
        "authors": [
            {"name": "Open Author", "contact": "open@example.org", "contact_permission": true, "preferred_contact_mode": "email"},
            {"name": "Quiet Author", "contact": "quiet@example.org", "contact_permission": false}
        ],
        "description": "Neural MT results.",
        "link": link,
        "kind": "paper",
        "languages": languages,
        "benchmarks": benchmarks,
        "submitter": {"name": "Sub Mitter", "email": "submitter@example.org"}
    })
}

/// Pulls the token out of a `/respond/{token}` or `/revise/{token}` link.
pub fn token_from(body: &str, segment: &str) -> String {
    let start = body.find(segment).unwrap_or_else(|| panic!("no {segment} link in {body}")) + segment.len();
    body[start..].chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '-' || *c == '_').collect()
}
