mod args;
mod commands;

use std::io::Write as _;
use std::process::ExitCode;

use clap::Parser;
use mtcat_api::ApiError;
use mtcat_core::canonical::to_canonical_json;
use mtcat_core::store::StoreError;
use mtcat_core::workflows::WorkflowError;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_STORAGE: u8 = 3;

/// A command that did not succeed. `error` is `None` when the command
/// already printed its own diagnostics.
#[derive(Debug)]
pub struct Failure {
    pub exit: u8,
    pub error: Option<ApiError>,
}

impl Failure {
    fn with(exit: u8, http_status: u16, code: &str, message: impl ToString) -> Self {
        Failure {
            exit,
            error: Some(ApiError { http_status, code: code.into(), message: message.to_string(), details: None }),
        }
    }

    pub fn config(message: impl ToString) -> Self {
        Self::with(EXIT_CONFIG, 500, "ConfigError", message)
    }

    pub fn op(code: &str, message: impl ToString) -> Self {
        Self::with(EXIT_FAILURE, 400, code, message)
    }

    pub fn reported(exit: u8) -> Self {
        Failure { exit, error: None }
    }

    fn report(&self, json: bool) {
        let Some(err) = &self.error else { return };
        if json {
            print!("{}", to_canonical_json(err).expect("ApiError serializes"));
            let _ = std::io::stdout().flush();
        } else {
            eprintln!("error: {} ({})", err.message, err.code);
            for issue in err.details.iter().flatten() {
                eprintln!("  {}: {} {}", issue.field_path, issue.code, issue.message);
            }
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        let exit = match e {
            StoreError::Locked(_) | StoreError::Io(_) | StoreError::Corrupt { .. } => EXIT_STORAGE,
            _ => EXIT_FAILURE,
        };
        Failure { exit, error: Some(ApiError::from(e)) }
    }
}

impl From<WorkflowError> for Failure {
    fn from(e: WorkflowError) -> Self {
        match e {
            WorkflowError::Store(inner) => inner.into(),
            other => Failure { exit: EXIT_FAILURE, error: Some(ApiError::from(other)) },
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = args::Cli::parse();
    let json = cli.global.json;
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            failure.report(json);
            ExitCode::from(failure.exit)
        }
    }
}
