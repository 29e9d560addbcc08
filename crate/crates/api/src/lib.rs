//! HTTP surface of the catalog under `/api/v1`.
//!
//! Handlers are thin: they parse input, call one query or workflow
//! function, and serialize the result as canonical JSON. Author contacts
//! pass through the redacting views in `mtcat_core::views`.

mod config;
mod error;
mod routes;

use std::sync::Arc;

use axum::body::Body;
use axum::extract::{FromRequest, FromRequestParts, Query, Request};
use axum::http::{header, request::Parts, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Router;
use chrono::{DateTime, Utc};
use mtcat_core::canonical::to_canonical_json;
use mtcat_core::store::Store;
use mtcat_core::workflows::WorkflowConfig;
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower_http::catch_panic::CatchPanicLayer;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use config::{read_config_file, ConfigError, ServerConfig, CONFIG_KEYS};
pub use error::ApiError;
pub use routes::{
    CreatedResponse, DecisionRequest, LanguageDetail, RespondRequest, RespondResponse, ResponsePage, RevisionPage,
};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub admin_token: String,
    pub workflow: WorkflowConfig,
    /// `*` allows any origin; `None` disables CORS headers.
    pub cors_origin: Option<String>,
}

#[derive(Clone)]
pub struct AppState {
    pub store: Store,
    pub config: Arc<ApiConfig>,
    clock: Clock,
}

impl AppState {
    pub fn new(store: Store, config: ApiConfig) -> Self {
        Self::with_clock(store, config, Arc::new(Utc::now))
    }

    pub fn with_clock(store: Store, config: ApiConfig, clock: Clock) -> Self {
        AppState { store, config: Arc::new(config), clock }
    }

    pub fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }
}

pub fn router(state: AppState) -> Router {
    let cors = state.config.cors_origin.as_deref().map(cors_layer);
    let mut app = Router::new()
        .nest("/api/v1", routes::v1())
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "method not allowed on this endpoint")
        })
        .with_state(state)
        .layer(CatchPanicLayer::custom(|_| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", "internal error").into_response()
        }));
    if let Some(cors) = cors {
        app = app.layer(cors);
    }
    app
}

fn cors_layer(origin: &str) -> CorsLayer {
    let allow = if origin == "*" {
        AllowOrigin::any()
    } else {
        match HeaderValue::from_str(origin) {
            Ok(v) => AllowOrigin::exact(v),
            Err(_) => AllowOrigin::list([]),
        }
    };
    CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE, header::AUTHORIZATION])
}

/// Canonical JSON body with the given status.
pub fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    match to_canonical_json(value) {
        Ok(body) => Response::builder()
            .status(status)
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(body))
            .expect("static headers are valid"),
        Err(e) => {
            log::error!("response serialization failed: {e}");
            Response::builder()
                .status(StatusCode::INTERNAL_SERVER_ERROR)
                .header(header::CONTENT_TYPE, "application/json")
                .body(Body::from(
                    "{\n  \"code\": \"Internal\",\n  \"http_status\": 500,\n  \"message\": \"serialization failed\"\n}\n",
                ))
                .expect("static headers are valid")
        }
    }
}

/// JSON request body; any parse failure is a `MalformedBody` error.
pub struct JsonBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for JsonBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let bytes = axum::body::Bytes::from_request(req, state).await.map_err(ApiError::malformed_body)?;
        serde_json::from_slice(&bytes).map(JsonBody).map_err(ApiError::malformed_body)
    }
}

/// Query string; any parse failure is an `InvalidQuery` error.
pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|Query(v)| Params(v))
            .map_err(|e| ApiError::invalid_query(e.body_text()))
    }
}

/// Runs a store mutation off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
}

/// Serves `app` on `listener` until `shutdown` resolves, then drains
/// in-flight requests.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
