mod common;

use axum::http::StatusCode;
use chrono::Duration;
use common::{form, token_from, Harness, ADMIN};
use mtcat_api::ApiError;
use mtcat_core::catalog::LanguageTable;
use mtcat_core::workflows::{dispatch_emails, CapturingMailer};
use serde_json::{json, Value};

fn code(r: &common::Reply) -> String {
    let err: ApiError = serde_json::from_str(&r.text).unwrap_or_else(|e| panic!("not an ApiError ({e}): {}", r.text));
    assert_eq!(err.http_status, r.status.as_u16());
    err.code
}

#[tokio::test]
async fn empty_catalog_lists_every_language_with_zero_counts() {
    let h = Harness::new();
    let r = h.get("/api/v1/languages").await;
    assert_eq!(r.status, StatusCode::OK);
    let rows = r.json();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), LanguageTable::builtin().len());
    assert!(rows.iter().all(|row| row["research_count"] == 0 && row["dataset_count"] == 0));
    assert_eq!(h.get("/api/v1/languages?nonzero=true").await.json(), json!([]));
}

#[tokio::test]
async fn language_lookups_distinguish_unknown_from_malformed() {
    let h = Harness::new();
    let r = h.get("/api/v1/languages/zzz").await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::NOT_FOUND, "UnknownLanguage"));
    let r = h.get("/api/v1/languages/y1").await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::BAD_REQUEST, "NotIso6393Shape"));
    let r = h.get("/api/v1/languages/YOR").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["language"]["code"], "yor");
    let r = h.get("/api/v1/languages/yor?kind=poem").await;
    assert_eq!(code(&r), "InvalidQuery");
}

#[tokio::test]
async fn benchmark_query_errors() {
    let h = Harness::new();
    let r = h.get("/api/v1/benchmarks?source=yor&target=yor").await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::BAD_REQUEST, "SameLanguagePair"));
    let r = h.get("/api/v1/benchmarks?source=yor").await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::BAD_REQUEST, "InvalidQuery"));
    let r = h.get("/api/v1/benchmarks?source=yor&target=qqq").await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::NOT_FOUND, "UnknownLanguage"));
    let r = h.get("/api/v1/benchmarks?source=eng&target=yor").await;
    assert_eq!((r.status, r.json()), (StatusCode::OK, json!([])));
}

#[tokio::test]
async fn malformed_and_invalid_bodies() {
    let h = Harness::new();
    let r = h.call("POST", "/api/v1/contributions", Some("{\"title\": "), None).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::BAD_REQUEST, "MalformedBody"));
    let r = h.call("POST", "/api/v1/contributions", Some("{\"title\": 5}"), None).await;
    assert_eq!(code(&r), "MalformedBody");

    let mut bad = form("", "not a url", &["yor"], json!([]));
    bad["submitter"]["email"] = json!("nope");
    let r = h.post("/api/v1/contributions", &bad).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "ValidationFailed"));
    let paths: Vec<String> =
        r.json()["details"].as_array().unwrap().iter().map(|i| i["field_path"].as_str().unwrap().to_string()).collect();
    for p in ["title", "link", "submitter.email"] {
        assert!(paths.iter().any(|x| x == p), "{p} missing from {paths:?}");
    }
    assert!(h.store.view().is_empty());
}

#[tokio::test]
async fn routing_fallbacks_are_api_errors() {
    let h = Harness::new();
    let r = h.get("/api/v1/nothing-here").await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::NOT_FOUND, "NotFound"));
    let r = h.call("DELETE", "/api/v1/languages", None, None).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed"));
    let r = h.get("/api/v1/search?limit=lots").await;
    assert_eq!(code(&r), "InvalidQuery");
}

#[tokio::test]
async fn moderation_requires_the_admin_token() {
    let h = Harness::new();
    let r = h.get("/api/v1/moderation/queue").await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::UNAUTHORIZED, "MissingToken"));
    let r = h.call("GET", "/api/v1/moderation/queue", None, Some("wrong")).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::FORBIDDEN, "BadToken"));
    let r = h.call("POST", "/api/v1/moderation/x/decision", Some("{}"), Some("wrong")).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    let r = h.call("GET", "/api/v1/moderation/queue", None, Some(ADMIN)).await;
    assert_eq!((r.status, r.json()), (StatusCode::OK, json!([])));
}

#[tokio::test]
async fn contribution_lifecycle_over_http() {
    let h = Harness::new();
    let f = form("Yoruba-English NMT", "https://example.org/yo-en", &["yor"], json!([
        {"source_lang": "yor", "target_lang": "eng", "score": 12.5}
    ]));
    let r = h.post("/api/v1/contributions", &f).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let created = r.json();
    assert_eq!(created["state"], "Submitted");
    assert_eq!(created.as_object().unwrap().len(), 2, "POST responses stay minimal");
    let id = created["id"].as_str().unwrap();

    h.advance(Duration::minutes(1));
    let second = h.post("/api/v1/contributions", &form("Other", "https://example.org/other", &["hau"], json!([]))).await;
    let second_id = second.json()["id"].as_str().unwrap().to_string();
    let queue = h.admin_get("/api/v1/moderation/queue").await.json();
    let order: Vec<&str> = queue.as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(order, vec![id, second_id.as_str()]);

    let r = h.admin_post(&format!("/api/v1/moderation/{id}/decision"), &json!({"decision": "approve"})).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::CONFLICT, "IllegalTransition"));

    let r = h.admin_post(&format!("/api/v1/moderation/{id}/take"), &json!({})).await;
    assert_eq!(r.json()["state"], "UnderReview");
    let r = h.admin_post(&format!("/api/v1/moderation/{id}/decision"), &json!({"decision": "approve", "note": "ok"})).await;
    assert_eq!(r.status, StatusCode::OK);
    let view = r.json();
    assert_eq!(view["state"], "Published");
    let entry_id = view["published_entry"].as_str().unwrap().to_string();

    let r = h.admin_post(&format!("/api/v1/moderation/{id}/decision"), &json!({"decision": "reject"})).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::CONFLICT, "IllegalTransition"));
    let r = h.admin_get("/api/v1/moderation/nope").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let detail = h.get("/api/v1/languages/yor").await.json();
    assert_eq!(detail["entries"]["total"], 1);
    assert_eq!(detail["entries"]["items"][0]["id"], entry_id.as_str());
    assert_eq!(detail["pairs"], json!([{"source": "yor", "target": "eng", "count": 1}]));
    let board = h.get("/api/v1/benchmarks?source=yor&target=eng").await.json();
    assert_eq!(board[0]["rank"], 1);
    assert_eq!(board[0]["score"], 12.5);
    assert_eq!(h.get("/api/v1/languages?nonzero=true").await.json().as_array().unwrap().len(), 1);
    let hits = h.get("/api/v1/search?q=yoruba&lang=yor").await.json();
    assert_eq!(hits["total"], 1);
    assert_eq!(h.get("/api/v1/stats/rate?lang=yor").await.json(), json!([{"year": 2024, "count": 1}]));
    assert_eq!(h.get("/api/v1/stats/rate?lang=yor&cumulative=true").await.json(), json!([{"year": 2024, "count": 1}]));
}

#[tokio::test]
async fn exact_duplicate_and_merge() {
    let h = Harness::new();
    h.publish(&form("A", "https://example.org/a", &["yor"], json!([]))).await;
    let dup = form("A again", "https://example.org/a/", &["yor", "ibo"], json!([
        {"source_lang": "ibo", "target_lang": "eng", "score": 20.0}
    ]));
    let id = h.post("/api/v1/contributions", &dup).await.json()["id"].as_str().unwrap().to_string();
    h.admin_post(&format!("/api/v1/moderation/{id}/take"), &json!({})).await;
    let r = h.admin_post(&format!("/api/v1/moderation/{id}/decision"), &json!({"decision": "approve"})).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::CONFLICT, "ExactDuplicate"));
    let r = h.admin_post(&format!("/api/v1/moderation/{id}/decision"), &json!({"decision": "merge"})).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    let ibo = h.get("/api/v1/languages/ibo").await.json();
    assert_eq!(ibo["entries"]["total"], 1);
    assert_eq!(h.get("/api/v1/search").await.json()["total"], 1);
}

#[tokio::test]
async fn changes_requested_then_revised() {
    let h = Harness::new();
    let id = h.post("/api/v1/contributions", &form("Draft", "https://example.org/d", &["swa"], json!([]))).await.json()["id"]
        .as_str()
        .unwrap()
        .to_string();
    h.admin_post(&format!("/api/v1/moderation/{id}/take"), &json!({})).await;
    let r = h
        .admin_post(&format!("/api/v1/moderation/{id}/decision"), &json!({"decision": "request_changes", "note": "add a benchmark"}))
        .await;
    assert_eq!(r.json()["state"], "ChangesRequested");
    assert!(!r.text.contains("revision_token") && !r.text.contains("submitter@example.org"));

    let mailer = CapturingMailer::default();
    dispatch_emails(&h.store, &mailer, &h.config, h.now()).unwrap();
    let mail = mailer.sent();
    assert_eq!(mail.len(), 1);
    let token = token_from(&mail[0].body, "/revise/");

    assert_eq!(h.get("/api/v1/revise/not-a-token").await.status, StatusCode::NOT_FOUND);
    let page = h.get(&format!("/api/v1/revise/{token}")).await;
    assert_eq!(page.status, StatusCode::OK);
    assert_eq!(page.json()["review_note"], "add a benchmark");
    let mut revised = form("Draft v2", "https://example.org/d", &["swa"], json!([
        {"source_lang": "swa", "target_lang": "eng", "score": 30.0}
    ]));
    revised.as_object_mut().unwrap().remove("submitter");
    let r = h.post(&format!("/api/v1/revise/{token}"), &revised).await;
    assert_eq!((r.status, r.json()["state"].clone()), (StatusCode::OK, json!("Submitted")));
    assert_eq!(h.get(&format!("/api/v1/revise/{token}")).await.status, StatusCode::NOT_FOUND);
}

fn recommendation(email: &str) -> Value {
    json!({
        "recommender": {"name": "Rec Ommender", "email": "rec@example.org"},
        "recommendee": {"name": "Ada Researcher", "email": email},
        "work_hint": {"title": "Fon speech corpus", "link": "https://example.org/fon", "languages": ["fon"]}
    })
}

#[tokio::test]
async fn recommendation_round_trip() {
    let h = Harness::new();
    let r = h.post("/api/v1/recommendations", &recommendation("ada@example.org")).await;
    assert_eq!((r.status, r.json()["state"].clone()), (StatusCode::CREATED, json!("EmailQueued")));
    let r = h.post("/api/v1/recommendations", &recommendation("ADA@example.org")).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::CONFLICT, "DuplicateRecommendation"));

    let token = h.store.view().recommendations().next().unwrap().0.token.clone();
    let r = h.post(&format!("/api/v1/respond/{token}"), &json!({"response": "accept"})).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::CONFLICT, "IllegalTransition"));

    let mailer = CapturingMailer::default();
    dispatch_emails(&h.store, &mailer, &h.config, h.now()).unwrap();
    let mail = mailer.sent();
    assert_eq!(mail[0].to, "ada@example.org");
    assert_eq!(token_from(&mail[0].body, "/respond/"), token);

    let page = h.get(&format!("/api/v1/respond/{token}")).await;
    assert_eq!(page.status, StatusCode::OK);
    assert!(!page.text.contains("ada@example.org") && !page.text.contains(&token));
    let page = page.json();
    assert_eq!(page["state"], "EmailSent");
    let mut draft = page["draft"].clone();
    draft["description"] = json!("A corpus of Fon speech.");
    draft["authors"] = json!([{"name": "Ada Researcher"}]);

    let r = h.post(&format!("/api/v1/respond/{token}"), &json!({"response": "accept", "draft": draft})).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
    let out = r.json();
    assert_eq!(out["recommendation"]["state"], "Accepted");
    assert_eq!(out["contribution"]["state"], "Submitted");
    assert_eq!(out["recommendation"]["contribution_id"], out["contribution"]["id"]);

    let r = h.post(&format!("/api/v1/respond/{token}"), &json!({"response": "decline"})).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::GONE, "TokenAlreadyUsed"));
    let r = h.get(&format!("/api/v1/respond/{token}")).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::GONE, "TokenAlreadyUsed"));
    let r = h.get("/api/v1/respond/AAAAAAAAAAAAAAAAAAAAAA").await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::NOT_FOUND, "UnknownToken"));
}

#[tokio::test]
async fn expired_token_is_gone() {
    let h = Harness::new();
    h.post("/api/v1/recommendations", &recommendation("late@example.org")).await;
    dispatch_emails(&h.store, &CapturingMailer::default(), &h.config, h.now()).unwrap();
    let token = h.store.view().recommendations().next().unwrap().0.token.clone();
    h.advance(h.config.token_ttl + Duration::seconds(1));
    let r = h.get(&format!("/api/v1/respond/{token}")).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::GONE, "TokenExpired"));
    let r = h.post(&format!("/api/v1/respond/{token}"), &json!({"response": "accept"})).await;
    assert_eq!((r.status, code(&r).as_str()), (StatusCode::GONE, "TokenExpired"));
    assert_eq!(h.store.view().recommendations().next().unwrap().0.state.to_string(), "Expired");
}

#[tokio::test]
async fn contacts_without_permission_never_leave_the_server() {
    let h = Harness::new();
    h.publish(&form("Zulu MT", "https://example.org/zu", &["zul"], json!([
        {"source_lang": "eng", "target_lang": "zul", "score": 25.0}
    ])))
    .await;
    let pending = h.post("/api/v1/contributions", &form("Pending", "https://example.org/p", &["zul"], json!([]))).await;
    let pending_id = pending.json()["id"].as_str().unwrap().to_string();

    let paths = [
        "/api/v1/languages/zul".to_string(),
        "/api/v1/search?q=zulu".to_string(),
        "/api/v1/search".to_string(),
    ];
    for p in &paths {
        let r = h.get(p).await;
        assert!(!r.text.contains("quiet@example.org"), "{p} leaked a contact");
        assert!(r.text.contains("open@example.org"), "{p} hid a permitted contact");
    }
    for p in ["/api/v1/moderation/queue".to_string(), format!("/api/v1/moderation/{pending_id}")] {
        let r = h.admin_get(&p).await;
        assert!(!r.text.contains("quiet@example.org") && !r.text.contains("submitter@example.org"), "{p}: {}", r.text);
    }
}

#[tokio::test]
async fn responses_are_canonical_json_with_cors() {
    let h = Harness::new();
    let req = axum::http::Request::builder()
        .uri("/api/v1/languages?nonzero=true")
        .header("origin", "https://web.example.org")
        .body(axum::body::Body::empty())
        .unwrap();
    let resp = tower::ServiceExt::oneshot(h.app.clone(), req).await.unwrap();
    assert_eq!(resp.headers()["content-type"], "application/json");
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
    let r = h.get("/api/v1/languages/yor").await;
    assert!(r.text.ends_with('\n'));
    assert_eq!(mtcat_core::canonical::to_canonical_json(&r.json()).unwrap(), r.text);
}
