use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::mail::{EmailStatus, Mailer, OutboundEmail, SendOutcome};
use super::state::RecommendationState;
use super::{WorkflowConfig, WorkflowError};
use crate::catalog::RecordId;
use crate::store::{Record, Store, Write};

pub const DISPATCH_LEASE: &str = "dispatch";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DispatchReport {
    pub dispatched: usize,
    pub retry_scheduled: usize,
    pub failed: usize,
}

fn apply_outcome(email: &mut OutboundEmail, outcome: &SendOutcome, config: &WorkflowConfig, now: DateTime<Utc>) {
    email.attempts += 1;
    match outcome {
        SendOutcome::Ok => {
            email.status = EmailStatus::Sent;
            email.sent_at = Some(now);
            email.last_error = None;
        }
        SendOutcome::PermanentError(msg) => {
            email.status = EmailStatus::Failed;
            email.last_error = Some(msg.clone());
        }
        SendOutcome::TransientError(msg) => {
            email.last_error = Some(msg.clone());
            if email.attempts >= config.max_attempts {
                email.status = EmailStatus::Failed;
            } else {
                email.next_attempt_at = now + config.backoff_after(email.attempts);
            }
        }
    }
}

/// Sends every due queued email. A successful outreach send moves its
/// recommendation to `EmailSent`; failures are recorded on the email.
/// Only one dispatcher runs at a time per store.
pub fn dispatch_emails(
    store: &Store,
    mailer: &dyn Mailer,
    config: &WorkflowConfig,
    now: DateTime<Utc>,
) -> Result<DispatchReport, WorkflowError> {
    let _lease = store.try_lease(DISPATCH_LEASE)?;
    let due: Vec<(RecordId, OutboundEmail)> = {
        let view = store.view();
        let recs = view
            .recommendations()
            .filter(|(r, _)| r.state == RecommendationState::EmailQueued)
            .filter_map(|(r, _)| r.email.as_ref().filter(|e| e.is_due(now)).map(|e| (r.id.clone(), e.clone())));
        let notices = view
            .contributions()
            .filter_map(|(c, _)| c.notice.as_ref().filter(|e| e.is_due(now)).map(|e| (c.id.clone(), e.clone())));
        let mut all: Vec<_> = recs.chain(notices).collect();
        all.sort_by(|a, b| a.1.queued_at.cmp(&b.1.queued_at).then_with(|| a.0.cmp(&b.0)));
        all
    };

    let mut report = DispatchReport::default();
    for (id, email) in due {
        let outcome = mailer.send(&email.to, &email.subject, &email.body);
        match &outcome {
            SendOutcome::Ok => {
                report.dispatched += 1;
                log::info!("sent mail for {id} to {}", email.to);
            }
            SendOutcome::TransientError(e) | SendOutcome::PermanentError(e) => {
                log::warn!("mail for {id} to {} failed: {e}", email.to);
            }
        }
        let (status, _) = store.transact(now, |state| {
            let Some(stored) = state.get(&id) else {
                return Ok((None, vec![]));
            };
            let mut record = stored.payload.clone();
            let slot = match &mut record {
                Record::Recommendation(r) => r.email.as_mut(),
                Record::Contribution(c) => c.notice.as_mut(),
                _ => None,
            };
            // Skip if the record moved on while we were sending.
            let Some(slot) = slot.filter(|e| e.status == EmailStatus::Queued && e.queued_at == email.queued_at) else {
                return Ok((None, vec![]));
            };
            apply_outcome(slot, &outcome, config, now);
            let status = slot.status;
            if let (Record::Recommendation(r), EmailStatus::Sent) = (&mut record, status) {
                r.transition(RecommendationState::EmailSent)?;
            }
            Ok::<_, WorkflowError>((Some(status), vec![Write::put(record, Some(stored.version))]))
        })?;
        match (status, &outcome) {
            (Some(EmailStatus::Failed), _) => report.failed += 1,
            (Some(EmailStatus::Queued), _) => report.retry_scheduled += 1,
            _ => {}
        }
    }
    Ok(report)
}
