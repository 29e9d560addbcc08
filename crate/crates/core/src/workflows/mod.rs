//! Contribution moderation and recommendation outreach.
//!
//! Every transition is a read-check-write inside [`Store::transact`], so two
//! racing transitions on one record produce one winner; the loser sees the
//! new state and gets [`WorkflowError::IllegalTransition`].
//!
//! [`Store::transact`]: crate::store::Store::transact

mod contribution;
mod dispatch;
pub mod mail;
mod recommendation;
pub mod state;
mod token;

use chrono::Duration;
use thiserror::Error;

use crate::catalog::{RecordId, ValidationReport};
use crate::store::StoreError;

pub use contribution::{
    resubmit_contribution, review_decision, submit_contribution, take_for_review, Contribution, ContributionForm,
    moderation_queue, Decision, ReviewEvent, Submitter, ADMIN_ACTOR, SUBMITTER_ACTOR,
};
pub use dispatch::{dispatch_emails, DispatchReport, DISPATCH_LEASE};
pub use mail::{CapturingMailer, EmailStatus, Mailer, OutboundEmail, SendOutcome, SmtpMailer};
pub use recommendation::{
    expire_recommendations, respond_to_recommendation, submit_recommendation, Person, Recommendation,
    RecommendationForm, Recommendee, RespondOutcome, Response, WorkHint, WorkHintForm,
};
pub use state::{ContributionState, RecommendationState};
pub use token::{generate_token, tokens_equal, TOKEN_LEN};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowConfig {
    /// Prefix for links placed in outbound mail, without trailing slash.
    pub base_url: String,
    pub token_ttl: Duration,
    pub dedup_window: Duration,
    pub max_attempts: u32,
    /// Delay before retry n (1-based) is `backoff[n - 1]`; the last entry repeats.
    pub backoff: Vec<Duration>,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        WorkflowConfig {
            base_url: "http://localhost:8080".to_string(),
            token_ttl: Duration::days(30),
            dedup_window: Duration::days(30),
            max_attempts: 3,
            backoff: vec![Duration::minutes(1), Duration::minutes(5), Duration::minutes(25)],
        }
    }
}

impl WorkflowConfig {
    pub fn with_base_url(base_url: impl Into<String>) -> Self {
        WorkflowConfig { base_url: base_url.into().trim_end_matches('/').to_string(), ..Default::default() }
    }

    pub fn response_url(&self, token: &str) -> String {
        format!("{}/respond/{token}", self.base_url)
    }

    pub fn revision_url(&self, token: &str) -> String {
        format!("{}/revise/{token}", self.base_url)
    }

    fn backoff_after(&self, attempts: u32) -> Duration {
        let idx = (attempts.max(1) - 1) as usize;
        self.backoff.get(idx).or(self.backoff.last()).copied().unwrap_or_else(|| Duration::minutes(1))
    }
}

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("validation failed")]
    ValidationFailed(ValidationReport),
    #[error("{0} not found")]
    NotFound(RecordId),
    #[error("illegal transition {from} -> {to}")]
    IllegalTransition { from: String, to: String },
    #[error("an active recommendation for this researcher and work already exists ({0})")]
    DuplicateRecommendation(RecordId),
    #[error("the catalog already has an entry with this link: {0:?}")]
    ExactDuplicate(Vec<RecordId>),
    #[error("no published entry shares this contribution's link")]
    NoMergeTarget,
    #[error("unknown token")]
    UnknownToken,
    #[error("token expired")]
    TokenExpired,
    #[error("token already used")]
    TokenAlreadyUsed,
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl WorkflowError {
    pub fn code(&self) -> &'static str {
        match self {
            WorkflowError::ValidationFailed(_) => "ValidationFailed",
            WorkflowError::NotFound(_) => "NotFound",
            WorkflowError::IllegalTransition { .. } => "IllegalTransition",
            WorkflowError::DuplicateRecommendation(_) => "DuplicateRecommendation",
            WorkflowError::ExactDuplicate(_) => "ExactDuplicate",
            WorkflowError::NoMergeTarget => "NoMergeTarget",
            WorkflowError::UnknownToken => "UnknownToken",
            WorkflowError::TokenExpired => "TokenExpired",
            WorkflowError::TokenAlreadyUsed => "TokenAlreadyUsed",
            WorkflowError::Store(e) => e.code(),
        }
    }

    fn illegal(from: impl ToString, to: impl ToString) -> Self {
        WorkflowError::IllegalTransition { from: from.to_string(), to: to.to_string() }
    }
}
