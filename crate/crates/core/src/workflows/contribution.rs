use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::mail::OutboundEmail;
use super::state::ContributionState;
use super::token::{generate_token, tokens_equal};
use super::{WorkflowConfig, WorkflowError};
use crate::catalog::validate::{build_entry, is_valid_email, validate_entry, validate_stored_entry};
use crate::catalog::{
    detect_duplicates, DuplicateReport, EntryDraft, Issue, IssueCode, RecordId, ResearchEntry, ValidationReport,
};
use crate::store::{CatalogState, Record, Store, Write};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Submitter {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub email: String,
}

impl Submitter {
    fn check(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        if self.name.trim().is_empty() {
            issues.push(Issue::new("submitter.name", IssueCode::Required, "submitter name must not be empty"));
        }
        if !is_valid_email(&self.email) {
            issues.push(Issue::new("submitter.email", IssueCode::InvalidEmail, "submitter email is not a valid address"));
        }
        issues
    }
}

/// History actor for the submitter's own steps; contact details stay out of history.
pub const SUBMITTER_ACTOR: &str = "submitter";

/// History actor for decisions made with the admin token.
pub const ADMIN_ACTOR: &str = "admin";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewEvent {
    pub at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<ContributionState>,
    pub to: ContributionState,
    pub actor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub id: RecordId,
    pub draft: EntryDraft,
    pub submitter: Submitter,
    pub state: ContributionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_note: Option<String>,
    pub duplicate_report: DuplicateReport,
    pub submitted_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_recommendation: Option<RecordId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_entry: Option<RecordId>,
    #[serde(default)]
    pub history: Vec<ReviewEvent>,
    /// Mail to the submitter when changes are requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<OutboundEmail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision_token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContributionForm {
    #[serde(flatten)]
    pub draft: EntryDraft,
    #[serde(default)]
    pub submitter: Submitter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Approve,
    Reject,
    RequestChanges,
    /// Publish by folding the draft's benchmarks and languages into the
    /// existing entry that has the same link.
    Merge,
}

impl Decision {
    pub fn target_state(self) -> ContributionState {
        match self {
            Decision::Approve | Decision::Merge => ContributionState::Published,
            Decision::Reject => ContributionState::Rejected,
            Decision::RequestChanges => ContributionState::ChangesRequested,
        }
    }
}

impl Contribution {
    pub(crate) fn new(
        draft: EntryDraft,
        submitter: Submitter,
        duplicate_report: DuplicateReport,
        origin_recommendation: Option<RecordId>,
        actor: &str,
        now: DateTime<Utc>,
    ) -> Self {
        Contribution {
            id: RecordId::generate(now),
            draft,
            submitter,
            state: ContributionState::Submitted,
            review_note: None,
            duplicate_report,
            submitted_at: now,
            decided_at: None,
            origin_recommendation,
            published_entry: None,
            history: vec![ReviewEvent { at: now, from: None, to: ContributionState::Submitted, actor: actor.into(), note: None }],
            notice: None,
            revision_token: None,
        }
    }

    /// Moves to `to` if the edge is legal, recording it in `history`.
    pub fn transition(
        &mut self,
        to: ContributionState,
        actor: &str,
        note: Option<String>,
        now: DateTime<Utc>,
    ) -> Result<(), WorkflowError> {
        if !self.state.can_transition_to(to) {
            return Err(WorkflowError::illegal(self.state, to));
        }
        self.history.push(ReviewEvent { at: now, from: Some(self.state), to, actor: actor.into(), note: note.clone() });
        self.state = to;
        Ok(())
    }

    pub fn validate_shape(&self) -> ValidationReport {
        let mut issues = Vec::new();
        if self.state == ContributionState::Published && self.published_entry.is_none() {
            issues.push(Issue::new("published_entry", IssueCode::Required, "published contribution must reference its entry"));
        }
        if self.state == ContributionState::ChangesRequested && self.revision_token.is_none() {
            issues.push(Issue::new("revision_token", IssueCode::Required, "changes requested without a revision token"));
        }
        ValidationReport::from_issues(issues)
    }
}

fn check_form(form: &ContributionForm, state: &CatalogState) -> ValidationReport {
    let mut report = validate_entry(&form.draft, state.languages());
    for issue in form.submitter.check() {
        report.push(issue);
    }
    report
}

/// Validates and queues a contribution in `Submitted`. Exact-link matches
/// are accepted and flagged in the duplicate report.
pub fn submit_contribution(
    store: &Store,
    form: ContributionForm,
    origin_recommendation: Option<RecordId>,
    now: DateTime<Utc>,
) -> Result<Contribution, WorkflowError> {
    let (contribution, _) = store.transact(now, |state| {
        let report = check_form(&form, state);
        if !report.ok() {
            return Err(WorkflowError::ValidationFailed(report));
        }
        if let Some(origin) = &origin_recommendation {
            if state.recommendation(origin).is_none() {
                return Err(WorkflowError::NotFound(origin.clone()));
            }
        }
        let dupes = detect_duplicates(&form.draft, state.entries());
        let c = Contribution::new(form.draft, form.submitter, dupes, origin_recommendation, SUBMITTER_ACTOR, now);
        Ok((c.clone(), vec![Write::create(Record::Contribution(c))]))
    })?;
    Ok(contribution)
}

fn load(state: &CatalogState, id: &RecordId) -> Result<(Contribution, u64), WorkflowError> {
    state.contribution(id).map(|(c, v)| (c.clone(), v)).ok_or_else(|| WorkflowError::NotFound(id.clone()))
}

/// Submitted -> UnderReview.
/// Contributions awaiting a moderator (Submitted or UnderReview), oldest
/// submission first, ties by id.
pub fn moderation_queue(state: &CatalogState) -> Vec<(&Contribution, u64)> {
    let mut queue: Vec<(&Contribution, u64)> = state
        .contributions()
        .filter(|(c, _)| matches!(c.state, ContributionState::Submitted | ContributionState::UnderReview))
        .collect();
    queue.sort_by(|(a, _), (b, _)| a.submitted_at.cmp(&b.submitted_at).then_with(|| a.id.cmp(&b.id)));
    queue
}

pub fn take_for_review(store: &Store, id: &RecordId, moderator: &str, now: DateTime<Utc>) -> Result<Contribution, WorkflowError> {
    let (c, _) = store.transact(now, |state| {
        let (mut c, version) = load(state, id)?;
        c.transition(ContributionState::UnderReview, moderator, None, now)?;
        Ok::<_, WorkflowError>((c.clone(), vec![Write::put(Record::Contribution(c), Some(version))]))
    })?;
    Ok(c)
}

fn merge_into(existing: &ResearchEntry, draft_entry: &ResearchEntry) -> ResearchEntry {
    let mut merged = existing.clone();
    merged.languages.extend(draft_entry.languages.iter().copied());
    for b in &draft_entry.benchmarks {
        if !merged.benchmarks.contains(b) {
            merged.benchmarks.push(b.clone());
        }
    }
    let known: BTreeSet<&str> = merged.authors.iter().map(|a| a.name.as_str()).collect();
    let extra: Vec<_> = draft_entry.authors.iter().filter(|a| !known.contains(a.name.as_str())).cloned().collect();
    merged.authors.extend(extra);
    if merged.test_data_link.is_none() {
        merged.test_data_link = draft_entry.test_data_link.clone();
    }
    merged
}

/// Applies a moderator decision to a contribution that is under review.
/// Approval creates the research entry in the same atomic write.
pub fn review_decision(
    store: &Store,
    id: &RecordId,
    decision: Decision,
    note: Option<String>,
    moderator: &str,
    config: &WorkflowConfig,
    now: DateTime<Utc>,
) -> Result<Contribution, WorkflowError> {
    let (c, _) = store.transact(now, |state| {
        let (mut c, version) = load(state, id)?;
        let target = decision.target_state();
        if !c.state.can_transition_to(target) {
            return Err(WorkflowError::illegal(c.state, target));
        }
        let mut writes = Vec::new();
        match decision {
            Decision::Approve | Decision::Merge => {
                let entry = build_entry(RecordId::generate(now), &c.draft, state.languages(), now)
                    .map_err(WorkflowError::ValidationFailed)?;
                let dupes = detect_duplicates(&c.draft, state.entries());
                c.duplicate_report = dupes.clone();
                match (decision, dupes.exact.first()) {
                    (Decision::Approve, None) => {
                        c.published_entry = Some(entry.id.clone());
                        writes.push(Write::create(Record::Entry(entry)));
                    }
                    (Decision::Approve, Some(_)) => return Err(WorkflowError::ExactDuplicate(dupes.exact)),
                    (_, Some(target_id)) => {
                        let existing = state.entry(target_id).expect("listed by duplicate scan");
                        let merged = merge_into(existing, &entry);
                        let report = validate_stored_entry(&merged, state.languages());
                        if !report.ok() {
                            return Err(WorkflowError::ValidationFailed(report));
                        }
                        c.published_entry = Some(existing.id.clone());
                        writes.push(Write::put(Record::Entry(merged), Some(state.version_of(target_id))));
                    }
                    (_, None) => return Err(WorkflowError::NoMergeTarget),
                }
                c.decided_at = Some(now);
            }
            Decision::Reject => c.decided_at = Some(now),
            Decision::RequestChanges => {
                let token = generate_token();
                let url = config.revision_url(&token);
                let mut body = format!(
                    "Hello {},\n\nA moderator has asked for changes to your contribution \"{}\" before it can be published.\n\n",
                    c.submitter.name.trim(),
                    c.draft.title.trim()
                );
                if let Some(n) = note.as_deref().filter(|n| !n.trim().is_empty()) {
                    body.push_str("Moderator note:\n");
                    body.push_str(n.trim());
                    body.push_str("\n\n");
                }
                body.push_str(&format!("You can revise and resubmit it here:\n{url}\n"));
                c.notice = Some(OutboundEmail::queued(
                    c.submitter.email.trim(),
                    "Changes requested for your catalog contribution",
                    body,
                    now,
                ));
                c.revision_token = Some(token);
            }
        }
        c.review_note = note.clone();
        c.transition(target, moderator, note.clone(), now)?;
        writes.push(Write::put(Record::Contribution(c.clone()), Some(version)));
        Ok((c, writes))
    })?;
    Ok(c)
}

/// ChangesRequested -> Submitted with a revised draft, located by the
/// revision token sent to the submitter.
pub fn resubmit_contribution(
    store: &Store,
    revision_token: &str,
    draft: EntryDraft,
    now: DateTime<Utc>,
) -> Result<Contribution, WorkflowError> {
    let (c, _) = store.transact(now, |state| {
        let (found, version) = state
            .contributions()
            .find(|(c, _)| c.revision_token.as_deref().is_some_and(|t| tokens_equal(t, revision_token)))
            .map(|(c, v)| (c.clone(), v))
            .ok_or(WorkflowError::UnknownToken)?;
        let mut c = found;
        let form = ContributionForm { draft, submitter: c.submitter.clone() };
        let report = check_form(&form, state);
        if !report.ok() {
            return Err(WorkflowError::ValidationFailed(report));
        }
        c.transition(ContributionState::Submitted, SUBMITTER_ACTOR, None, now)?;
        c.duplicate_report = detect_duplicates(&form.draft, state.entries());
        c.draft = form.draft;
        c.revision_token = None;
        c.submitted_at = now;
        Ok((c.clone(), vec![Write::put(Record::Contribution(c), Some(version))]))
    })?;
    Ok(c)
}
