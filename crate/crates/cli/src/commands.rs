use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::time::Duration;

use chrono::Utc;
use mtcat_api::{read_config_file, router, AppState, ServerConfig};
use mtcat_core::canonical::to_canonical_json;
use mtcat_core::catalog::{LanguageTable, RecordId};
use mtcat_core::ingest::{bulk_import, parse_bibtex, parse_csv, ImportPolicy, ImportReport};
use mtcat_core::store::{CatalogSnapshot, ImportMode, Store, StoreError};
use mtcat_core::views::ContributionView;
use mtcat_core::workflows::{
    dispatch_emails, expire_recommendations, moderation_queue, review_decision, take_for_review, Contribution,
    Decision, SmtpMailer, WorkflowConfig, ADMIN_ACTOR,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{Cli, Command, Format, Global, Moderate, Policy};
use crate::{Failure, EXIT_FAILURE};

/// Layers flag/environment values (already merged by clap) over the
/// optional config file.
struct Settings {
    global: Global,
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(global: Global) -> Result<Self, Failure> {
        let file = match &global.config {
            Some(path) => read_config_file(path).map_err(Failure::config)?,
            None => BTreeMap::new(),
        };
        Ok(Settings { global, file })
    }

    fn flag(&self, key: &str) -> Option<String> {
        let g = &self.global;
        match key {
            "DATA_PATH" => g.data.as_ref().map(|p| p.to_string_lossy().into_owned()),
            "BASE_URL" => g.base_url.clone(),
            "SMTP_URL" => g.smtp_url.clone(),
            "MAIL_FROM" => g.mail_from.clone(),
            _ => None,
        }
    }

    fn lookup<'a>(&'a self, extra: &'a [(&'a str, &'a Option<String>)]) -> impl Fn(&str) -> Option<String> + 'a {
        move |key| {
            extra
                .iter()
                .find(|(k, _)| *k == key)
                .and_then(|(_, v)| (*v).clone())
                .or_else(|| self.flag(key))
                .or_else(|| self.file.get(key).cloned())
        }
    }

    fn operator(&self) -> Result<ServerConfig, Failure> {
        ServerConfig::for_operator(self.lookup(&[])).map_err(Failure::config)
    }
}

fn open_store(path: &Path, read_only: bool) -> Result<Store, Failure> {
    let seed = LanguageTable::builtin();
    let opened = if read_only && !path.is_dir() {
        Err(StoreError::Io(std::io::Error::new(std::io::ErrorKind::NotFound, "no such directory")))
    } else if read_only {
        Store::open_read_only(path, &seed)
    } else {
        Store::open(path, &seed)
    };
    opened.map_err(|e| {
        let mut f = Failure::from(e);
        f.exit = crate::EXIT_STORAGE;
        if let Some(err) = f.error.as_mut() {
            err.message = format!("cannot open data path {}: {}", path.display(), err.message);
        }
        f
    })
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) {
    if json {
        print!("{}", to_canonical_json(value).expect("output serializes"));
    } else {
        println!("{}", text());
    }
    let _ = std::io::stdout().flush();
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let json = cli.global.json;
    let settings = Settings::load(cli.global)?;
    match cli.command {
        Command::Serve { bind, admin_token, cors_origin } => {
            let extra = [("BIND_ADDR", &bind), ("ADMIN_TOKEN", &admin_token), ("CORS_ORIGIN", &cors_origin)];
            let config = ServerConfig::from_lookup(settings.lookup(&extra)).map_err(Failure::config)?;
            serve(config, json)
        }
        Command::Import { format, file, policy, replace } => {
            let config = settings.operator()?;
            let bytes = std::fs::read(&file).map_err(|e| Failure::op("FileUnreadable", format!("{}: {e}", file.display())))?;
            let store = open_store(&config.data_path, false)?;
            import(&store, format, &bytes, policy, replace, json)
        }
        Command::Export { out } => {
            let config = settings.operator()?;
            let store = open_store(&config.data_path, true)?;
            let snapshot = store.export_catalog();
            std::fs::write(&out, snapshot.to_canonical_json())
                .map_err(|e| Failure::op("FileUnwritable", format!("{}: {e}", out.display())))?;
            let counts = json!({
                "out": out.to_string_lossy(),
                "entries": snapshot.entries.len(),
                "datasets": snapshot.datasets.len(),
                "contributions": snapshot.contributions.len(),
                "recommendations": snapshot.recommendations.len(),
            });
            emit(json, &counts, || {
                format!(
                    "exported entries={} datasets={} contributions={} recommendations={} to {}",
                    counts["entries"], counts["datasets"], counts["contributions"], counts["recommendations"], out.display()
                )
            });
            Ok(())
        }
        Command::SeedLanguages { file } => {
            let config = settings.operator()?;
            let text = std::fs::read_to_string(&file)
                .map_err(|e| Failure::op("FileUnreadable", format!("{}: {e}", file.display())))?;
            let table = LanguageTable::parse_seed(&text).map_err(|e| Failure::op("InvalidSeed", e))?;
            let store = open_store(&config.data_path, false)?;
            let count = table.len();
            store.set_languages(table)?;
            emit(json, &json!({"languages": count}), || format!("languages={count}"));
            Ok(())
        }
        Command::DispatchEmails { daemon, interval } => {
            let config = settings.operator()?;
            let smtp = config.smtp_url.clone().ok_or_else(|| Failure::config("SMTP_URL is required to send mail"))?;
            let mailer = SmtpMailer::from_url(&smtp, &config.mail_from).map_err(Failure::config)?;
            let workflow = WorkflowConfig::with_base_url(&config.base_url);
            let store = open_store(&config.data_path, false)?;
            if daemon {
                run_daemon(&store, &mailer, &workflow, Duration::from_secs(interval.max(1)), json)
            } else {
                let report = dispatch_emails(&store, &mailer, &workflow, Utc::now())?;
                emit(json, &report, || {
                    format!("dispatched={} retry_scheduled={} failed={}", report.dispatched, report.retry_scheduled, report.failed)
                });
                Ok(())
            }
        }
        Command::Expire => {
            let config = settings.operator()?;
            let store = open_store(&config.data_path, false)?;
            let expired = expire_recommendations(&store, Utc::now())?;
            emit(json, &json!({"expired": expired}), || format!("expired={expired}"));
            Ok(())
        }
        Command::Moderate { action } => {
            let config = settings.operator()?;
            moderate(&config, action, json)
        }
        Command::Delete { id, expected_version } => {
            let config = settings.operator()?;
            let store = open_store(&config.data_path, false)?;
            let id = RecordId::new(id);
            store.delete(&id, expected_version, Utc::now())?;
            emit(json, &json!({"deleted": id}), || format!("deleted {id}"));
            Ok(())
        }
    }
}

fn serve(config: ServerConfig, json: bool) -> Result<(), Failure> {
    let store = open_store(&config.data_path, false)?;
    let state = AppState::new(store.clone(), config.api_config());
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::op("Runtime", e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.bind_addr)
            .await
            .map_err(|e| Failure::op("BindFailed", format!("{}: {e}", config.bind_addr)))?;
        let addr = listener.local_addr().map_err(|e| Failure::op("BindFailed", e))?;
        emit(json, &json!({"listening": addr.to_string()}), || format!("listening on http://{addr}"));
        mtcat_api::serve(listener, router(state), shutdown_signal()).await.map_err(|e| Failure::op("ServeFailed", e))
    })?;
    store.compact()?;
    log::info!("shut down cleanly");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = terminate => {}
    }
}

fn import(store: &Store, format: Format, bytes: &[u8], policy: Policy, replace: bool, json: bool) -> Result<(), Failure> {
    let policy = match policy {
        Policy::Skip => ImportPolicy::SkipDuplicates,
        Policy::Update => ImportPolicy::UpdateMatching,
    };
    let now = Utc::now();
    let report = match format {
        Format::Csv | Format::Bibtex => {
            let parsed = if format == Format::Csv { parse_csv(bytes) } else { parse_bibtex(bytes) };
            let parsed = parsed.map_err(|e| Failure::op(e.code(), e))?;
            bulk_import(store, parsed, policy, now)?
        }
        Format::Snapshot => {
            let text = std::str::from_utf8(bytes).map_err(|e| Failure::op("NotUtf8", e))?;
            let snapshot = CatalogSnapshot::from_json(text)?;
            let mode = if replace { ImportMode::Replace } else { ImportMode::Merge };
            let summary = store.import_catalog(&snapshot, mode, now).map_err(snapshot_failure)?;
            ImportReport {
                created: summary.created,
                updated: summary.updated,
                skipped_duplicates: summary.skipped,
                failed: Vec::new(),
            }
        }
    };
    emit(json, &report, || {
        format!(
            "created={} updated={} skipped_duplicates={} failed={}",
            report.created,
            report.updated,
            report.skipped_duplicates,
            report.failed.len()
        )
    });
    if report.failed.is_empty() {
        return Ok(());
    }
    if !json {
        for failure in &report.failed {
            for issue in &failure.issues {
                let path = if issue.field_path.is_empty() { String::new() } else { format!("{}: ", issue.field_path) };
                eprintln!("{}: {path}{} {}", failure.locator, issue.code, issue.message);
            }
        }
    }
    Err(Failure::reported(EXIT_FAILURE))
}

/// Lists each rejected snapshot record on the error.
fn snapshot_failure(e: StoreError) -> Failure {
    let StoreError::SnapshotInvalid(records) = &e else { return e.into() };
    let details = records
        .iter()
        .flat_map(|(id, report)| {
            report.issues().iter().map(move |i| {
                let mut i = i.clone();
                i.field_path = format!("{id}.{}", i.field_path);
                i
            })
        })
        .collect();
    let mut failure = Failure::from(e);
    if let Some(err) = failure.error.as_mut() {
        err.details = Some(details);
    }
    failure
}

fn run_daemon(
    store: &Store,
    mailer: &SmtpMailer,
    workflow: &WorkflowConfig,
    interval: Duration,
    json: bool,
) -> Result<(), Failure> {
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::op("Runtime", e))?;
    runtime.block_on(async {
        let mut stop = std::pin::pin!(shutdown_signal());
        loop {
            let now = Utc::now();
            let expired = expire_recommendations(store, now)?;
            let report = dispatch_emails(store, mailer, workflow, now)?;
            let line = json!({
                "at": now,
                "expired": expired,
                "dispatched": report.dispatched,
                "retry_scheduled": report.retry_scheduled,
                "failed": report.failed,
            });
            if json {
                println!("{}", serde_json::to_string(&line).expect("plain JSON"));
            } else {
                println!(
                    "{} expired={expired} dispatched={} retry_scheduled={} failed={}",
                    now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    report.dispatched,
                    report.retry_scheduled,
                    report.failed
                );
            }
            let _ = std::io::stdout().flush();
            tokio::select! {
                _ = tokio::time::sleep(interval) => {}
                _ = &mut stop => return Ok(()),
            }
        }
    })
}

fn moderate(config: &ServerConfig, action: Moderate, json: bool) -> Result<(), Failure> {
    let (target, decision) = match action {
        Moderate::List => {
            let store = open_store(&config.data_path, true)?;
            let view = store.view();
            let queue: Vec<ContributionView> =
                moderation_queue(&view).into_iter().map(|(c, v)| ContributionView::new(c, v)).collect();
            emit(json, &queue, || queue_table(&queue));
            return Ok(());
        }
        Moderate::Take(t) => (t, None),
        Moderate::Approve(t) => (t, Some(Decision::Approve)),
        Moderate::Reject(t) => (t, Some(Decision::Reject)),
        Moderate::RequestChanges(t) => (t, Some(Decision::RequestChanges)),
        Moderate::Merge(t) => (t, Some(Decision::Merge)),
    };
    let store = open_store(&config.data_path, false)?;
    let workflow = WorkflowConfig::with_base_url(&config.base_url);
    let id = RecordId::new(target.id);
    let now = Utc::now();
    let c: Contribution = match decision {
        None => take_for_review(&store, &id, ADMIN_ACTOR, now)?,
        Some(d) => review_decision(&store, &id, d, target.note, ADMIN_ACTOR, &workflow, now)?,
    };
    let version = store.view().version_of(&c.id);
    let view = ContributionView::new(&c, version);
    emit(json, &view, || match &view.published_entry {
        Some(entry) => format!("{} {} entry={entry}", view.id, view.state),
        None => format!("{} {}", view.id, view.state),
    });
    Ok(())
}

fn queue_table(queue: &[ContributionView]) -> String {
    let mut out = format!("{:<26}  {:<12}  {:<20}  {}", "ID", "STATE", "SUBMITTED", "TITLE");
    for c in queue {
        let flag = if c.duplicate_report.is_empty() { "" } else { " [possible duplicate]" };
        out.push_str(&format!(
            "\n{:<26}  {:<12}  {:<20}  {}{flag}",
            c.id,
            c.state,
            c.submitted_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            c.draft.title
        ));
    }
    if queue.is_empty() {
        out.push_str("\n(queue is empty)");
    }
    out
}
