//! `qorpilot` command-line front end.
//!
//! Every stage reads and writes canonical JSON artifacts, so the pipeline
//! can be run end to end or one stage at a time:
//!
//! ```text
//! graph-build -> link -> doc-gen -> index -> plan -> localize -> run
//! ```
//!
//! `bisect` and `report` work on the outputs of `run`.

pub mod cmd;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::Config;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qorpilot", version, about = "QoR-driven code changes for EDA repositories")]
pub struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a repository into a code graph.
    GraphBuild(GraphBuildArgs),
    /// Link script commands to their handlers and condense call cycles.
    Link(LinkArgs),
    /// Generate documentation cards bottom-up.
    DocGen(DocGenArgs),
    /// Build the repository and literature search indexes.
    Index(IndexArgs),
    /// Retrieve evidence, synthesize a high-level plan and validate it.
    Plan(PlanArgs),
    /// Map a plan onto an edit surface and granular steps.
    Localize(LocalizeArgs),
    /// Execute a granular plan under the QoR gate.
    Run(RunArgs),
    /// Find the first patch of a sequence that causes a failure.
    Bisect(BisectArgs),
    /// Tabulate base and new QoR per design.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GraphBuildArgs {
    #[arg(long)]
    pub repo: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Glob of repository paths to drop (repeatable).
    #[arg(long)]
    pub exclude: Vec<String>,
    /// Also link scripts and condense, as `link` would.
    #[arg(long)]
    pub link: bool,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Registration call as `function:arg_index` (repeatable).
    #[arg(long)]
    pub pattern: Vec<String>,
    /// Leave call cycles uncondensed.
    #[arg(long)]
    pub no_condense: bool,
}

#[derive(Debug, Args)]
pub struct DocGenArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub repo: PathBuf,
    /// Card directory; existing cards are reused when `--incremental`.
    #[arg(long)]
    pub cards: PathBuf,
    #[arg(long)]
    pub incremental: bool,
    #[arg(long)]
    pub synth_cmd: Option<String>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub repo: PathBuf,
    #[arg(long)]
    pub cards: PathBuf,
    #[arg(long)]
    pub literature: Option<PathBuf>,
    /// Output directory; receives `repo/` and `literature/`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub embed_cmd: Option<String>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub cards: PathBuf,
    /// Index directory written by `index`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Validate this plan instead of synthesizing one.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Objective metric: rwl, ecp, wns, tns or power.
    #[arg(long, default_value = "rwl")]
    pub objective: String,
    /// Comma-separated module scope.
    #[arg(long, value_delimiter = ',')]
    pub scope: Vec<String>,
    #[arg(long, default_value = "")]
    pub context: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub synth_cmd: Option<String>,
    #[arg(long)]
    pub embed_cmd: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowConfigArgs {
    /// Flow configuration as `KEY=VALUE` lines.
    #[arg(long)]
    pub flow_config: Option<PathBuf>,
    #[arg(long)]
    pub design: Option<String>,
    #[arg(long)]
    pub platform: Option<String>,
    #[arg(long)]
    pub stage: Option<String>,
    /// Flow parameter `KEY=VALUE` (repeatable).
    #[arg(long = "param")]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// JSON object of per-file change counts.
    #[arg(long)]
    pub change_freq: Option<PathBuf>,
    #[command(flatten)]
    pub flow: FlowConfigArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowRunnerArgs {
    /// `replay` or `process`.
    #[arg(long)]
    pub flow_runner: Option<String>,
    /// Replay fixture (repeatable).
    #[arg(long)]
    pub fixture: Vec<PathBuf>,
    #[arg(long)]
    pub flow_cmd: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub granular_plan: PathBuf,
    /// Workspace edited in place.
    #[arg(long, default_value = ".")]
    pub repo: PathBuf,
    #[command(flatten)]
    pub runner: FlowRunnerArgs,
    /// Scripted proposer file.
    #[arg(long)]
    pub proposer: Option<PathBuf>,
    #[arg(long)]
    pub proposer_cmd: Option<String>,
    /// Composite weight `metric=value` (repeatable).
    #[arg(long = "weight")]
    pub weights: Vec<String>,
    #[arg(long)]
    pub max_candidates: Option<usize>,
    #[arg(long)]
    pub max_repairs: Option<usize>,
    /// Run directory for outcomes, logs and the manifest.
    #[arg(long, default_value = "qorpilot-run")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BisectArgs {
    /// Workspace in the state before the first patch.
    #[arg(long)]
    pub repo: PathBuf,
    /// JSON array of unified diffs, in application order.
    #[arg(long)]
    pub patches: PathBuf,
    /// Shell command run in the workspace; nonzero exit means failure.
    #[arg(long)]
    pub check_cmd: Option<String>,
    #[command(flatten)]
    pub runner: FlowRunnerArgs,
    #[command(flatten)]
    pub flow: FlowConfigArgs,
    #[arg(long = "weight")]
    pub weights: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run manifest written by `run`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Fixture whose `baseline` entries are compared against `--patch`.
    #[arg(long)]
    pub fixture: Vec<PathBuf>,
    #[arg(long)]
    pub patch: Option<String>,
    #[arg(long, default_value = "Full")]
    pub stage: String,
    /// QoR field to tabulate.
    #[arg(long, default_value = "routed_wirelength_um")]
    pub metric: String,
    #[arg(long)]
    pub json: bool,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with(args: Vec<String>, env: BTreeMap<String, String>) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, &env) {
        Ok(code) => code,
        Err(e) => {
            tracing::error!(error = %e, "command failed");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, env: &BTreeMap<String, String>) -> Result<u8, CliError> {
    let config = Config::load(cli.config.as_deref(), env)?;
    match cli.command {
        Command::GraphBuild(a) => cmd::graph::build(&a, &config),
        Command::Link(a) => cmd::graph::link(&a, &config),
        Command::DocGen(a) => cmd::docs::run(&a, &config),
        Command::Index(a) => cmd::index::run(&a, &config),
        Command::Plan(a) => cmd::plan::run(&a, &config),
        Command::Localize(a) => cmd::localize::run(&a, &config),
        Command::Run(a) => cmd::run::run(&a, &config),
        Command::Bisect(a) => cmd::bisect::run(&a, &config),
        Command::Report(a) => cmd::report::run(&a, &config),
    }
}

/// Installs the JSON-lines logger on standard error. `QORPILOT_LOG` takes
/// an env-filter directive; the default is `warn`.
pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("QORPILOT_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt().json().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}
