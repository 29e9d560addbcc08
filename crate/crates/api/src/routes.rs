use axum::extract::{FromRequestParts, Path, State};
use axum::http::{header, request::Parts, StatusCode};
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use chrono::{DateTime, Utc};
use mtcat_core::catalog::{EntryDraft, EntryKind, Language, LanguageCode, RecordId};
use mtcat_core::query::{benchmark_pairs, language_summaries, leaderboard, research_level, research_rate, search, PairSummary};
use mtcat_core::store::{CatalogState, Page, PageRequest, DEFAULT_PAGE_LIMIT};
use mtcat_core::views::{ContributionView, DatasetView, DraftView, EntryView, RecommendationReceipt, SearchHitView};
use mtcat_core::workflows::{
    moderation_queue, resubmit_contribution, respond_to_recommendation, review_decision, submit_contribution,
    submit_recommendation, take_for_review, tokens_equal, ContributionForm, ContributionState, Decision,
    RecommendationForm, RecommendationState, Response as Reply, WorkHint, ADMIN_ACTOR,
};
use serde::{Deserialize, Serialize};

use crate::{blocking, json_response, ApiError, AppState, JsonBody, Params};

pub(crate) fn v1() -> Router<AppState> {
    Router::new()
        .route("/languages", get(list_languages))
        .route("/languages/{code}", get(language_detail))
        .route("/benchmarks", get(benchmarks))
        .route("/search", get(search_entries))
        .route("/stats/rate", get(rate))
        .route("/contributions", post(create_contribution))
        .route("/recommendations", post(create_recommendation))
        .route("/respond/{token}", get(response_page).post(respond))
        .route("/revise/{token}", get(revision_page).post(revise))
        .route("/moderation/queue", get(queue))
        .route("/moderation/{id}", get(moderation_item))
        .route("/moderation/{id}/take", post(take))
        .route("/moderation/{id}/decision", post(decide))
}

type ApiResult = Result<Response, ApiError>;

fn ok<T: Serialize>(value: &T) -> ApiResult {
    Ok(json_response(StatusCode::OK, value))
}

fn page(offset: Option<usize>, limit: Option<usize>) -> PageRequest {
    PageRequest::new(offset.unwrap_or(0), limit.unwrap_or(DEFAULT_PAGE_LIMIT))
}

fn known_language(state: &CatalogState, raw: &str) -> Result<LanguageCode, ApiError> {
    Ok(state.languages().normalize(raw)?)
}

fn parse_kind(raw: Option<&str>) -> Result<Option<EntryKind>, ApiError> {
    match raw.map(str::trim).filter(|k| !k.is_empty()) {
        None => Ok(None),
        Some(k) => EntryKind::parse(k).map(Some).ok_or_else(|| ApiError::invalid_query(format!("unknown kind `{k}`"))),
    }
}

#[derive(Deserialize)]
struct LanguagesQuery {
    #[serde(default)]
    nonzero: bool,
}

async fn list_languages(State(app): State<AppState>, Params(q): Params<LanguagesQuery>) -> ApiResult {
    let mut rows = language_summaries(&app.store.view());
    if q.nonzero {
        rows.retain(|r| r.research_count > 0 || r.dataset_count > 0);
    }
    ok(&rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageDetail {
    pub language: Language,
    pub entries: Page<EntryView>,
    pub datasets: Page<DatasetView>,
    pub pairs: Vec<PairSummary>,
}

#[derive(Deserialize)]
struct DetailQuery {
    offset: Option<usize>,
    limit: Option<usize>,
    kind: Option<String>,
    dataset_offset: Option<usize>,
    dataset_limit: Option<usize>,
}

async fn language_detail(
    State(app): State<AppState>,
    Path(code): Path<String>,
    Params(q): Params<DetailQuery>,
) -> ApiResult {
    let kind = parse_kind(q.kind.as_deref())?;
    let view = app.store.view();
    let code = known_language(&view, &code)?;
    let language = view.languages().get(code).cloned().expect("normalized against this table");
    ok(&LanguageDetail {
        language,
        entries: view.entries_by_language(code, kind, page(q.offset, q.limit)).map(|e| EntryView::from(&e)),
        datasets: view.datasets_by_language(code, page(q.dataset_offset, q.dataset_limit)),
        pairs: benchmark_pairs(&view, code),
    })
}

#[derive(Deserialize)]
struct BenchmarkQuery {
    source: Option<String>,
    target: Option<String>,
}

async fn benchmarks(State(app): State<AppState>, Params(q): Params<BenchmarkQuery>) -> ApiResult {
    let (Some(source), Some(target)) = (q.source, q.target) else {
        return Err(ApiError::invalid_query("both `source` and `target` are required"));
    };
    let source_code = LanguageCode::parse_shape(&source)?;
    let target_code = LanguageCode::parse_shape(&target)?;
    if source_code == target_code {
        return Err(mtcat_core::query::QueryError::SameLanguagePair.into());
    }
    let view = app.store.view();
    let source = known_language(&view, &source)?;
    let target = known_language(&view, &target)?;
    ok(&leaderboard(&view, source, target)?)
}

#[derive(Deserialize)]
struct SearchQuery {
    q: Option<String>,
    lang: Option<String>,
    kind: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

async fn search_entries(State(app): State<AppState>, Params(q): Params<SearchQuery>) -> ApiResult {
    let kind = parse_kind(q.kind.as_deref())?;
    let view = app.store.view();
    let lang = match q.lang.as_deref().map(str::trim).filter(|l| !l.is_empty()) {
        Some(l) => Some(known_language(&view, l)?),
        None => None,
    };
    let hits = search(&view, q.q.as_deref().unwrap_or(""), lang, kind);
    ok(&Page::from_sorted(hits, page(q.offset, q.limit)).map(|h| SearchHitView::from(&h)))
}

#[derive(Deserialize)]
struct RateQuery {
    lang: Option<String>,
    #[serde(default)]
    cumulative: bool,
}

async fn rate(State(app): State<AppState>, Params(q): Params<RateQuery>) -> ApiResult {
    let Some(lang) = q.lang else {
        return Err(ApiError::invalid_query("`lang` is required"));
    };
    let view = app.store.view();
    let points = research_rate(&view, known_language(&view, &lang)?);
    if q.cumulative {
        ok(&research_level(&points))
    } else {
        ok(&points)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedResponse {
    pub id: RecordId,
    pub state: String,
}

async fn create_contribution(State(app): State<AppState>, JsonBody(form): JsonBody<ContributionForm>) -> ApiResult {
    let now = app.now();
    let c = blocking(move || Ok(submit_contribution(&app.store, form, None, now)?)).await?;
    Ok(json_response(StatusCode::CREATED, &CreatedResponse { id: c.id, state: c.state.to_string() }))
}

async fn create_recommendation(State(app): State<AppState>, JsonBody(form): JsonBody<RecommendationForm>) -> ApiResult {
    let now = app.now();
    let r = blocking(move || Ok(submit_recommendation(&app.store, form, &app.config.workflow, now)?)).await?;
    Ok(json_response(StatusCode::CREATED, &CreatedResponse { id: r.id, state: r.state.to_string() }))
}

/// What the response page shows before the recommendee decides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsePage {
    pub state: RecommendationState,
    pub recommender_name: String,
    pub recommendee_name: String,
    pub work_hint: WorkHint,
    pub token_expires_at: DateTime<Utc>,
    pub draft: DraftView,
}

async fn response_page(State(app): State<AppState>, Path(token): Path<String>) -> ApiResult {
    let now = app.now();
    let view = app.store.view();
    let (rec, _) = view
        .recommendations()
        .find(|(r, _)| tokens_equal(&r.token, &token))
        .ok_or(mtcat_core::workflows::WorkflowError::UnknownToken)?;
    match rec.state {
        RecommendationState::Accepted | RecommendationState::Declined => {
            return Err(mtcat_core::workflows::WorkflowError::TokenAlreadyUsed.into())
        }
        RecommendationState::Expired => return Err(mtcat_core::workflows::WorkflowError::TokenExpired.into()),
        _ if now > rec.token_expires_at => return Err(mtcat_core::workflows::WorkflowError::TokenExpired.into()),
        _ => {}
    }
    ok(&ResponsePage {
        state: rec.state,
        recommender_name: rec.recommender.name.clone(),
        recommendee_name: rec.recommendee.name.clone(),
        work_hint: rec.work_hint.clone(),
        token_expires_at: rec.token_expires_at,
        draft: DraftView::from(&rec.prefilled_draft()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondRequest {
    pub response: Reply,
    /// Replaces the pre-filled draft when accepting.
    #[serde(default)]
    pub draft: Option<EntryDraft>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RespondResponse {
    pub recommendation: RecommendationReceipt,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contribution: Option<CreatedResponse>,
}

async fn respond(
    State(app): State<AppState>,
    Path(token): Path<String>,
    JsonBody(req): JsonBody<RespondRequest>,
) -> ApiResult {
    let now = app.now();
    let out = blocking(move || Ok(respond_to_recommendation(&app.store, &token, req.response, req.draft, now)?)).await?;
    let contribution = out.contribution.map(|c| CreatedResponse { id: c.id, state: c.state.to_string() });
    let status = if contribution.is_some() { StatusCode::CREATED } else { StatusCode::OK };
    Ok(json_response(
        status,
        &RespondResponse { recommendation: RecommendationReceipt::from(&out.recommendation), contribution },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionPage {
    pub id: RecordId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_note: Option<String>,
    pub draft: DraftView,
}

async fn revision_page(State(app): State<AppState>, Path(token): Path<String>) -> ApiResult {
    let view = app.store.view();
    let (c, _) = view
        .contributions()
        .find(|(c, _)| {
            c.state == ContributionState::ChangesRequested
                && c.revision_token.as_deref().is_some_and(|t| tokens_equal(t, &token))
        })
        .ok_or(mtcat_core::workflows::WorkflowError::UnknownToken)?;
    ok(&RevisionPage { id: c.id.clone(), review_note: c.review_note.clone(), draft: DraftView::from(&c.draft) })
}

async fn revise(State(app): State<AppState>, Path(token): Path<String>, JsonBody(draft): JsonBody<EntryDraft>) -> ApiResult {
    let now = app.now();
    let c = blocking(move || Ok(resubmit_contribution(&app.store, &token, draft, now)?)).await?;
    ok(&CreatedResponse { id: c.id, state: c.state.to_string() })
}

/// Requires `Authorization: Bearer <admin token>`.
struct Admin;

impl FromRequestParts<AppState> for Admin {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, app: &AppState) -> Result<Self, ApiError> {
        let Some(value) = parts.headers.get(header::AUTHORIZATION) else {
            return Err(ApiError::new(StatusCode::UNAUTHORIZED, "MissingToken", "moderation requires a bearer token"));
        };
        let presented = value.to_str().ok().and_then(|v| v.strip_prefix("Bearer ")).map(str::trim);
        match presented {
            Some(t) if !app.config.admin_token.is_empty() && tokens_equal(t, &app.config.admin_token) => Ok(Admin),
            _ => Err(ApiError::new(StatusCode::FORBIDDEN, "BadToken", "bearer token is not valid")),
        }
    }
}

async fn queue(_: Admin, State(app): State<AppState>) -> ApiResult {
    let view = app.store.view();
    let items: Vec<ContributionView> = moderation_queue(&view).into_iter().map(|(c, v)| ContributionView::new(c, v)).collect();
    ok(&items)
}

async fn moderation_item(_: Admin, State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let id = RecordId::new(id);
    let view = app.store.view();
    let (c, v) = view.contribution(&id).ok_or(mtcat_core::workflows::WorkflowError::NotFound(id.clone()))?;
    ok(&ContributionView::new(c, v))
}

fn current_view(app: &AppState, id: &RecordId) -> Result<ContributionView, ApiError> {
    let view = app.store.view();
    let (c, v) = view.contribution(id).ok_or_else(|| mtcat_core::workflows::WorkflowError::NotFound(id.clone()))?;
    Ok(ContributionView::new(c, v))
}

async fn take(_: Admin, State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let id = RecordId::new(id);
    let now = app.now();
    let state = app.clone();
    let id2 = id.clone();
    blocking(move || Ok(take_for_review(&state.store, &id2, ADMIN_ACTOR, now).map(|_| ())?)).await?;
    ok(&current_view(&app, &id)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub decision: Decision,
    #[serde(default)]
    pub note: Option<String>,
}

async fn decide(
    _: Admin,
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<DecisionRequest>,
) -> ApiResult {
    let id = RecordId::new(id);
    let now = app.now();
    let state = app.clone();
    let id2 = id.clone();
    blocking(move || {
        Ok(review_decision(&state.store, &id2, req.decision, req.note, ADMIN_ACTOR, &state.config.workflow, now).map(|_| ())?)
    })
    .await?;
    ok(&current_view(&app, &id)?)
}
