use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mtcat", version, about = "Operator tool for the African-language MT research catalog")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every command. Flags win over the environment,
/// which wins over the config file.
#[derive(Debug, Args)]
pub struct Global {
    /// Print machine-readable JSON instead of text
    #[arg(long, global = true, env = "MTCAT_JSON")]
    pub json: bool,
    /// TOML file with any of the config keys
    #[arg(long, global = true, env = "MTCAT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Catalog data directory
    #[arg(long, global = true, env = "DATA_PATH")]
    pub data: Option<PathBuf>,
    /// Public base URL used in emailed links
    #[arg(long, global = true, env = "BASE_URL")]
    pub base_url: Option<String>,
    /// smtp://, smtps:// or file:// mail transport
    #[arg(long, global = true, env = "SMTP_URL")]
    pub smtp_url: Option<String>,
    /// Sender address for outbound mail
    #[arg(long, global = true, env = "MAIL_FROM")]
    pub mail_from: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service until interrupted
    Serve {
        #[arg(long, env = "BIND_ADDR")]
        bind: Option<String>,
        #[arg(long, env = "ADMIN_TOKEN", hide_env_values = true)]
        admin_token: Option<String>,
        #[arg(long, env = "CORS_ORIGIN")]
        cors_origin: Option<String>,
    },
    /// Bulk-load records from a CSV, BibTeX or snapshot file
    Import {
        #[arg(long, value_enum, env = "MTCAT_FORMAT")]
        format: Format,
        #[arg(long, env = "MTCAT_FILE")]
        file: PathBuf,
        #[arg(long, value_enum, default_value = "skip", env = "MTCAT_POLICY")]
        policy: Policy,
        /// Snapshot only: make the store equal to the file
        #[arg(long, env = "MTCAT_REPLACE")]
        replace: bool,
    },
    /// Write the whole catalog as a snapshot
    Export {
        #[arg(long, env = "MTCAT_OUT")]
        out: PathBuf,
    },
    /// Replace the language table from a tab-separated seed file
    SeedLanguages {
        #[arg(long, env = "MTCAT_FILE")]
        file: PathBuf,
    },
    /// Send due outreach and notice emails
    DispatchEmails {
        /// Keep running, dispatching and expiring on an interval
        #[arg(long, env = "MTCAT_DAEMON")]
        daemon: bool,
        /// Seconds between daemon passes
        #[arg(long, default_value_t = 60, env = "MTCAT_INTERVAL")]
        interval: u64,
    },
    /// Expire recommendations whose response token has lapsed
    Expire,
    /// Work the moderation queue
    Moderate {
        #[command(subcommand)]
        action: Moderate,
    },
    /// Delete a record by id (recorded in the audit log)
    Delete {
        #[arg(long, env = "MTCAT_ID")]
        id: String,
        /// Refuse unless the record is at this version
        #[arg(long, env = "MTCAT_EXPECTED_VERSION")]
        expected_version: Option<u64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Moderate {
    /// Show Submitted and UnderReview contributions, oldest first
    List,
    Take(Target),
    Approve(Target),
    Reject(Target),
    RequestChanges(Target),
    /// Fold the contribution into the entry that has the same link
    Merge(Target),
}

#[derive(Debug, Args)]
pub struct Target {
    #[arg(long, env = "MTCAT_ID")]
    pub id: String,
    #[arg(long, env = "MTCAT_NOTE")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Bibtex,
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Skip,
    Update,
}
