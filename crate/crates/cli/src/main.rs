mod commands;
mod config;
mod error;

use std::io::IsTerminal as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use tracing::Level;

use crate::commands::analyze::AnalyzeArgs;
use crate::commands::build::BuildArgs;
use crate::commands::eval::EvalArgs;
use crate::commands::metrics::MetricsArgs;
use crate::commands::mock::MockArgs;
use crate::commands::taxomps::TaxompsArgs;
use crate::commands::validate::ValidateArgs;
use crate::config::PipelineConfig;
use crate::error::{config_error, CliResult};

/// Builds taxonomic QA datasets, scores models on them and analyses their
/// representations.
#[derive(Debug, Parser)]
#[command(name = "taxoprobe", version)]
struct Cli {
    /// TOML pipeline configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for the data-parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output on stderr; repeat for more.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the QA dataset from scene graphs and a taxonomy.
    Build(BuildArgs),
    /// Generate "is a" minimal pairs from the taxonomy alone.
    Taxomps(TaxompsArgs),
    /// Score a dataset against a chat-completions endpoint.
    Eval(EvalArgs),
    /// Recompute metrics from a run file.
    Metrics(MetricsArgs),
    /// Run representational analyses over embedding dumps.
    Analyze(AnalyzeArgs),
    /// Check dump manifests, sizes and digests.
    ValidateDump(ValidateArgs),
    /// Serve the deterministic mock endpoint.
    MockServe(MockArgs),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => Level::WARN,
        1 => Level::INFO,
        2 => Level::DEBUG,
        _ => Level::TRACE,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config_error("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_error(format!("cannot size the thread pool: {e}")))?;
    }
    let cfg = PipelineConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Build(a) => commands::build::run(a, cfg),
        Command::Taxomps(a) => commands::taxomps::run(a, cfg),
        Command::Eval(a) => commands::eval::run(a, cfg),
        Command::Metrics(a) => commands::metrics::run(a, cfg),
        Command::Analyze(a) => commands::analyze::run(a, cfg),
        Command::ValidateDump(a) => commands::validate::run(a),
        Command::MockServe(a) => commands::mock::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code())
        }
    }
}
