//! Outbound mail: the queued message record and the dispatch interface.

use std::collections::VecDeque;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmailStatus {
    Queued,
    Sent,
    /// Gave up; needs operator attention.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboundEmail {
    pub to: String,
    pub subject: String,
    pub body: String,
    pub queued_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sent_at: Option<DateTime<Utc>>,
    pub attempts: u32,
    pub next_attempt_at: DateTime<Utc>,
    pub status: EmailStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
}

impl OutboundEmail {
    pub fn queued(to: impl Into<String>, subject: impl Into<String>, body: impl Into<String>, now: DateTime<Utc>) -> Self {
        OutboundEmail {
            to: to.into(),
            subject: subject.into(),
            body: body.into(),
            queued_at: now,
            sent_at: None,
            attempts: 0,
            next_attempt_at: now,
            status: EmailStatus::Queued,
            last_error: None,
        }
    }

    pub fn is_due(&self, now: DateTime<Utc>) -> bool {
        self.status == EmailStatus::Queued && self.next_attempt_at <= now
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SendOutcome {
    Ok,
    TransientError(String),
    PermanentError(String),
}

pub trait Mailer: Send + Sync {
    fn send(&self, to: &str, subject: &str, body: &str) -> SendOutcome;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturedMail {
    pub to: String,
    pub subject: String,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FakeMode {
    Healthy,
    Transient,
    Permanent,
}

/// In-memory mailer that records every successful send.
#[derive(Debug)]
pub struct CapturingMailer {
    mode: Mutex<FakeMode>,
    scripted: Mutex<VecDeque<SendOutcome>>,
    sent: Mutex<Vec<CapturedMail>>,
    attempts: Mutex<usize>,
}

impl Default for CapturingMailer {
    fn default() -> Self {
        Self::with_mode(FakeMode::Healthy)
    }
}

impl CapturingMailer {
    pub fn with_mode(mode: FakeMode) -> Self {
        CapturingMailer {
            mode: Mutex::new(mode),
            scripted: Mutex::new(VecDeque::new()),
            sent: Mutex::new(Vec::new()),
            attempts: Mutex::new(0),
        }
    }

    pub fn set_mode(&self, mode: FakeMode) {
        *self.mode.lock() = mode;
    }

    /// Outcomes returned, in order, before falling back to the mode.
    pub fn script(&self, outcomes: impl IntoIterator<Item = SendOutcome>) {
        self.scripted.lock().extend(outcomes);
    }

    pub fn sent(&self) -> Vec<CapturedMail> {
        self.sent.lock().clone()
    }

    pub fn attempts(&self) -> usize {
        *self.attempts.lock()
    }
}

impl Mailer for CapturingMailer {
    fn send(&self, to: &str, subject: &str, body: &str) -> SendOutcome {
        *self.attempts.lock() += 1;
        let outcome = self.scripted.lock().pop_front().unwrap_or_else(|| match *self.mode.lock() {
            FakeMode::Healthy => SendOutcome::Ok,
            FakeMode::Transient => SendOutcome::TransientError("simulated transient failure".into()),
            FakeMode::Permanent => SendOutcome::PermanentError("simulated permanent failure".into()),
        });
        if outcome == SendOutcome::Ok {
            self.sent.lock().push(CapturedMail { to: to.into(), subject: subject.into(), body: body.into() });
        }
        outcome
    }
}

#[derive(Debug, Error)]
pub enum MailConfigError {
    #[error("unsupported mail URL `{0}`; expected smtp://, smtps:// or file://")]
    UnsupportedUrl(String),
    #[error("invalid sender address `{0}`")]
    BadSender(String),
    #[error("mail transport: {0}")]
    Transport(String),
}

enum Transport {
    Smtp(lettre::SmtpTransport),
    File(lettre::FileTransport),
}

/// Mailer backed by an SMTP relay (`smtp://`, `smtps://`) or, for local
/// operation, a directory of `.eml` files (`file:///path`).
pub struct SmtpMailer {
    transport: Transport,
    from: lettre::message::Mailbox,
}

impl SmtpMailer {
    pub fn from_url(url: &str, from: &str) -> Result<Self, MailConfigError> {
        let from = from.parse().map_err(|_| MailConfigError::BadSender(from.to_string()))?;
        let transport = if let Some(path) = url.strip_prefix("file://") {
            let dir = PathBuf::from(path);
            std::fs::create_dir_all(&dir).map_err(|e| MailConfigError::Transport(e.to_string()))?;
            Transport::File(lettre::FileTransport::new(dir))
        } else if url.starts_with("smtp://") || url.starts_with("smtps://") {
            let smtp = lettre::SmtpTransport::from_url(url)
                .map_err(|e| MailConfigError::Transport(e.to_string()))?
                .build();
            Transport::Smtp(smtp)
        } else {
            return Err(MailConfigError::UnsupportedUrl(url.to_string()));
        };
        Ok(SmtpMailer { transport, from })
    }
}

impl Mailer for SmtpMailer {
    fn send(&self, to: &str, subject: &str, body: &str) -> SendOutcome {
        use lettre::Transport as _;

        let Ok(to) = to.parse::<lettre::message::Mailbox>() else {
            return SendOutcome::PermanentError(format!("invalid recipient `{to}`"));
        };
        let message = match lettre::Message::builder()
            .from(self.from.clone())
            .to(to)
            .subject(subject)
            .header(lettre::message::header::ContentType::TEXT_PLAIN)
            .body(body.to_string())
        {
            Ok(m) => m,
            Err(e) => return SendOutcome::PermanentError(e.to_string()),
        };
        match &self.transport {
            Transport::Smtp(t) => match t.send(&message) {
                Ok(_) => SendOutcome::Ok,
                Err(e) if e.is_permanent() => SendOutcome::PermanentError(e.to_string()),
                Err(e) => SendOutcome::TransientError(e.to_string()),
            },
            Transport::File(t) => match t.send(&message) {
                Ok(_) => SendOutcome::Ok,
                Err(e) => SendOutcome::TransientError(e.to_string()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fake_records_only_successes() {
        let m = CapturingMailer::default();
        m.script([SendOutcome::TransientError("x".into())]);
        assert!(matches!(m.send("a@b.org", "s", "b"), SendOutcome::TransientError(_)));
        assert_eq!(m.send("a@b.org", "s", "b"), SendOutcome::Ok);
        assert_eq!(m.sent().len(), 1);
        assert_eq!(m.attempts(), 2);
    }

    #[test]
    fn file_transport_writes_message() {
        let dir = tempfile::tempdir().unwrap();
        let url = format!("file://{}", dir.path().display());
        let mailer = SmtpMailer::from_url(&url, "catalog@example.org").unwrap();
        assert_eq!(mailer.send("someone@example.org", "Hello", "body text"), SendOutcome::Ok);
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
    }

    #[test]
    fn rejects_unknown_scheme() {
        assert!(matches!(
            SmtpMailer::from_url("http://x", "a@b.org"),
            Err(MailConfigError::UnsupportedUrl(_))
        ));
    }
}
