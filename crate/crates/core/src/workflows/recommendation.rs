use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::contribution::{Contribution, ContributionForm, Submitter, SUBMITTER_ACTOR};
use super::mail::OutboundEmail;
use super::state::RecommendationState;
use super::token::{generate_token, tokens_equal, TOKEN_LEN};
use super::{WorkflowConfig, WorkflowError};
use crate::catalog::validate::{check_optional_link, is_valid_email, validate_entry};
use crate::catalog::{
    canonicalize_url, detect_duplicates, AuthorDraft, CanonicalUrl, ContactMode, EntryDraft, Issue, IssueCode,
    LanguageCode, LanguageTable, RecordId, ValidationReport,
};
use crate::store::{CatalogState, Record, Store, Write};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Person {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub email: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Recommendee {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub email: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkHint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<CanonicalUrl>,
    pub languages: BTreeSet<LanguageCode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorkHintForm {
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub link: Option<String>,
    #[serde(default)]
    pub languages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecommendationForm {
    #[serde(default)]
    pub recommender: Person,
    #[serde(default)]
    pub recommendee: Recommendee,
    #[serde(default)]
    pub work_hint: WorkHintForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub id: RecordId,
    pub recommender: Person,
    pub recommendee: Recommendee,
    pub work_hint: WorkHint,
    pub state: RecommendationState,
    pub token: String,
    pub token_expires_at: DateTime<Utc>,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub email: Option<OutboundEmail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contribution_id: Option<RecordId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responded_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Accept,
    Decline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RespondOutcome {
    pub recommendation: Recommendation,
    pub contribution: Option<Contribution>,
}

impl Recommendation {
    pub fn transition(&mut self, to: RecommendationState) -> Result<(), WorkflowError> {
        if !self.state.can_transition_to(to) {
            return Err(WorkflowError::illegal(self.state, to));
        }
        self.state = to;
        Ok(())
    }

    pub fn validate_shape(&self, languages: &LanguageTable) -> ValidationReport {
        let mut issues = Vec::new();
        if self.work_hint.languages.is_empty() {
            issues.push(Issue::new("work_hint.languages", IssueCode::Required, "at least one language is required"));
        }
        for code in &self.work_hint.languages {
            if !languages.contains(*code) {
                issues.push(Issue::new(
                    "work_hint.languages",
                    IssueCode::UnknownLanguage,
                    format!("`{code}` is not in the language table"),
                ));
            }
        }
        if self.token.len() != TOKEN_LEN {
            issues.push(Issue::new("token", IssueCode::InvalidField, "token has the wrong length"));
        }
        if self.state == RecommendationState::Accepted && self.contribution_id.is_none() {
            issues.push(Issue::new("contribution_id", IssueCode::Required, "accepted recommendation must link its contribution"));
        }
        ValidationReport::from_issues(issues)
    }

    fn is_expired(&self, now: DateTime<Utc>) -> bool {
        now > self.token_expires_at
    }

    /// Pre-filled contribution draft built from the work hint.
    pub fn prefilled_draft(&self) -> EntryDraft {
        EntryDraft {
            title: self.work_hint.title.clone().unwrap_or_default(),
            authors: vec![AuthorDraft {
                name: self.recommendee.name.clone(),
                contact: Some(self.recommendee.email.clone()),
                contact_permission: false,
                preferred_contact_mode: Some(ContactMode::Email),
            }],
            link: self.work_hint.link.as_ref().map(|l| l.as_str().to_string()).unwrap_or_default(),
            languages: self.work_hint.languages.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }
}

fn check_form(form: &RecommendationForm, table: &LanguageTable) -> ValidationReport {
    let mut issues = Vec::new();
    if form.recommender.name.trim().is_empty() {
        issues.push(Issue::new("recommender.name", IssueCode::Required, "recommender name must not be empty"));
    }
    if !is_valid_email(&form.recommender.email) {
        issues.push(Issue::new("recommender.email", IssueCode::InvalidEmail, "recommender email is not a valid address"));
    }
    if form.recommendee.name.trim().is_empty() {
        issues.push(Issue::new("recommendee.name", IssueCode::Required, "recommendee name must not be empty"));
    }
    if form.recommendee.email.trim().is_empty() {
        issues.push(Issue::new("recommendee.email", IssueCode::Required, "recommendee email is required"));
    } else if !is_valid_email(&form.recommendee.email) {
        issues.push(Issue::new("recommendee.email", IssueCode::InvalidEmail, "recommendee email is not a valid address"));
    }
    if form.work_hint.languages.is_empty() {
        issues.push(Issue::new("work_hint.languages", IssueCode::Required, "at least one language is required"));
    }
    for (i, raw) in form.work_hint.languages.iter().enumerate() {
        if let Err(e) = table.normalize(raw) {
            issues.push(Issue::new(format!("work_hint.languages[{i}]"), IssueCode::from(&e), e.to_string()));
        }
    }
    issues.extend(check_optional_link("work_hint.link", form.work_hint.link.as_deref()));
    ValidationReport::from_issues(issues)
}

fn outreach_email(rec: &Recommendation, state: &CatalogState, config: &WorkflowConfig, now: DateTime<Utc>) -> OutboundEmail {
    let names: Vec<&str> = rec
        .work_hint
        .languages
        .iter()
        .map(|c| state.languages().get(*c).map_or(c.as_str(), |l| l.display_name.as_str()))
        .collect();
    let mut body = format!(
        "Hello {},\n\n{} recommended you as someone working on machine translation for {}.\n",
        rec.recommendee.name.trim(),
        rec.recommender.name.trim(),
        names.join(", ")
    );
    if let Some(title) = rec.work_hint.title.as_deref().filter(|t| !t.trim().is_empty()) {
        body.push_str(&format!("The work they mentioned: \"{}\".\n", title.trim()));
    }
    body.push_str(
        "\nWe would like to record your research, benchmarks and test data in the open catalog of \
         African-language MT research. The catalog links to your work; it never hosts papers. \
         Your contact details are only shown if you allow it.\n\n",
    );
    body.push_str(&format!("To accept or decline, visit:\n{}\n\n", config.response_url(&rec.token)));
    body.push_str(&format!("This link expires on {}.\n", rec.token_expires_at.format("%Y-%m-%d %H:%M UTC")));
    OutboundEmail::queued(rec.recommendee.email.trim(), "You were recommended to the African-language MT catalog", body, now)
}

/// Records a recommendation, issues its response token and queues the
/// outreach email. Returns the recommendation in `EmailQueued`.
pub fn submit_recommendation(
    store: &Store,
    form: RecommendationForm,
    config: &WorkflowConfig,
    now: DateTime<Utc>,
) -> Result<Recommendation, WorkflowError> {
    let (rec, _) = store.transact(now, |state| {
        let report = check_form(&form, state.languages());
        if !report.ok() {
            return Err(WorkflowError::ValidationFailed(report));
        }
        let email = form.recommendee.email.trim().to_lowercase();
        let link = form.work_hint.link.as_deref().map(str::trim).filter(|s| !s.is_empty()).map(|l| canonicalize_url(l).expect("validated"));
        let window_start = now - config.dedup_window;
        if let Some((dup, _)) = state.recommendations().find(|(r, _)| {
            r.recommendee.email.trim().to_lowercase() == email && r.work_hint.link == link && r.created_at > window_start
        }) {
            return Err(WorkflowError::DuplicateRecommendation(dup.id.clone()));
        }
        let mut rec = Recommendation {
            id: RecordId::generate(now),
            recommender: Person { name: form.recommender.name.trim().into(), email: form.recommender.email.trim().into() },
            recommendee: Recommendee {
                name: form.recommendee.name.trim().into(),
                email: form.recommendee.email.trim().into(),
                affiliation: form.recommendee.affiliation.map(|a| a.trim().to_string()).filter(|a| !a.is_empty()),
            },
            work_hint: WorkHint {
                title: form.work_hint.title.map(|t| t.trim().to_string()).filter(|t| !t.is_empty()),
                link,
                languages: form.work_hint.languages.iter().map(|l| state.languages().normalize(l).expect("validated")).collect(),
            },
            state: RecommendationState::Submitted,
            token: generate_token(),
            token_expires_at: now + config.token_ttl,
            created_at: now,
            email: None,
            contribution_id: None,
            responded_at: None,
        };
        let submitted = Write::create(Record::Recommendation(rec.clone()));
        rec.transition(RecommendationState::EmailQueued)?;
        rec.email = Some(outreach_email(&rec, state, config, now));
        let queued = Write::put(Record::Recommendation(rec.clone()), Some(1));
        Ok((rec, vec![submitted, queued]))
    })?;
    Ok(rec)
}

/// Consumes a response token. Accepting creates a contribution in
/// `Submitted` linked back to the recommendation; `revised` replaces the
/// pre-filled draft and must validate.
pub fn respond_to_recommendation(
    store: &Store,
    token: &str,
    response: Response,
    revised: Option<EntryDraft>,
    now: DateTime<Utc>,
) -> Result<RespondOutcome, WorkflowError> {
    // Expiry is committed even though the caller gets an error back.
    enum Step {
        Done(RespondOutcome),
        Expired,
    }
    let (step, _) = store.transact(now, |state| {
        let (mut rec, version) = state
            .recommendations()
            .find(|(r, _)| tokens_equal(&r.token, token))
            .map(|(r, v)| (r.clone(), v))
            .ok_or(WorkflowError::UnknownToken)?;
        match rec.state {
            RecommendationState::Accepted | RecommendationState::Declined => return Err(WorkflowError::TokenAlreadyUsed),
            RecommendationState::Expired => return Err(WorkflowError::TokenExpired),
            _ => {}
        }
        if rec.is_expired(now) {
            if rec.state == RecommendationState::EmailSent {
                rec.transition(RecommendationState::Expired)?;
                rec.responded_at = Some(now);
                return Ok((Step::Expired, vec![Write::put(Record::Recommendation(rec), Some(version))]));
            }
            return Err(WorkflowError::TokenExpired);
        }
        match response {
            Response::Decline => {
                rec.transition(RecommendationState::Declined)?;
                rec.responded_at = Some(now);
                let write = Write::put(Record::Recommendation(rec.clone()), Some(version));
                Ok((Step::Done(RespondOutcome { recommendation: rec, contribution: None }), vec![write]))
            }
            Response::Accept => {
                let draft = match revised {
                    Some(d) => {
                        let report = validate_entry(&d, state.languages());
                        if !report.ok() {
                            return Err(WorkflowError::ValidationFailed(report));
                        }
                        d
                    }
                    None => rec.prefilled_draft(),
                };
                rec.transition(RecommendationState::Accepted)?;
                rec.responded_at = Some(now);
                let form = ContributionForm {
                    draft,
                    submitter: Submitter { name: rec.recommendee.name.clone(), email: rec.recommendee.email.clone() },
                };
                let dupes = detect_duplicates(&form.draft, state.entries());
                let contribution =
                    Contribution::new(form.draft, form.submitter, dupes, Some(rec.id.clone()), SUBMITTER_ACTOR, now);
                rec.contribution_id = Some(contribution.id.clone());
                let writes = vec![
                    Write::create(Record::Contribution(contribution.clone())),
                    Write::put(Record::Recommendation(rec.clone()), Some(version)),
                ];
                Ok((Step::Done(RespondOutcome { recommendation: rec, contribution: Some(contribution) }), writes))
            }
        }
    })?;
    match step {
        Step::Done(outcome) => Ok(outcome),
        Step::Expired => Err(WorkflowError::TokenExpired),
    }
}

/// Moves every `EmailSent` recommendation whose token has lapsed to `Expired`.
pub fn expire_recommendations(store: &Store, now: DateTime<Utc>) -> Result<usize, WorkflowError> {
    let (count, _) = store.transact(now, |state| {
        let mut writes = Vec::new();
        for (rec, version) in state.recommendations() {
            if rec.state == RecommendationState::EmailSent && rec.is_expired(now) {
                let mut rec = rec.clone();
                rec.transition(RecommendationState::Expired)?;
                writes.push(Write::put(Record::Recommendation(rec), Some(version)));
            }
        }
        Ok::<_, WorkflowError>((writes.len(), writes))
    })?;
    Ok(count)
}
