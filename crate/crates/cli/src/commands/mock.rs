use std::io::Write as _;
use std::path::PathBuf;

use anyhow::Context as _;
use clap::{Args, ValueEnum};
use taxoprobe_eval::mock::{serve, AnswerBook, Behavior, MockOptions, MockState};

use super::load_dataset;
use crate::error::{Classify, CliResult};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MockBehavior {
    Gold,
    AlwaysYes,
    DescriptionDependent,
}

#[derive(Debug, Args)]
pub struct MockArgs {
    /// Dataset whose gold labels the server answers from.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gold")]
    pub behavior: MockBehavior,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 0)]
    pub port: u16,
    #[arg(long, default_value_t = 0)]
    pub max_delay_ms: u64,
}

pub fn run(args: &MockArgs) -> CliResult<()> {
    let book = match &args.dataset {
        Some(p) => AnswerBook::from_dataset(&load_dataset(p)?),
        None => AnswerBook::default(),
    };
    let behavior = match args.behavior {
        MockBehavior::Gold => Behavior::GoldOracle,
        MockBehavior::AlwaysYes => Behavior::AlwaysYes,
        MockBehavior::DescriptionDependent => Behavior::DescriptionDependent,
    };
    let options = MockOptions {
        max_delay_ms: args.max_delay_ms,
        ..MockOptions::default()
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .data()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .with_context(|| format!("cannot bind {}:{}", args.host, args.port))
            .config()?;
        let addr = listener.local_addr().data()?;
        println!("listening on http://{addr}/v1");
        std::io::stdout().flush().data()?;
        serve(listener, MockState::new(behavior, book, options)).await.data()
    })
}
