use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::Args;
use taxoprobe_eval::{run_eval, Decision, Endpoint, Mode, RunOptions};

use super::metrics::{print_summary, write_metrics};
use super::{load_dataset, RunFile};
use crate::config::{require, write_json, PipelineConfig, Provenance};
use crate::error::{config_error, Classify, CliResult};

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Base URL of an OpenAI-compatible API, e.g. http://localhost:8000/v1.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// `argmax` or `sample(SEED)`.
    #[arg(long)]
    pub decision: Option<Decision>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub retries: Option<usize>,
    #[arg(long)]
    pub top_k: Option<u32>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub system_prompt: Option<String>,
    /// Defaults to `<out>/checkpoint.<mode>.ndjson`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Directory that relative image paths are resolved against (vqa mode).
    #[arg(long)]
    pub image_root: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EvalArgs {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        let ep = &mut cfg.endpoint;
        if let Some(url) = &self.endpoint {
            ep.base_url.clone_from(url);
        }
        if let Some(m) = &self.model {
            ep.model_name.clone_from(m);
        }
        if let Some(n) = self.max_in_flight {
            ep.max_in_flight = n;
        }
        if let Some(t) = self.timeout {
            ep.timeout_secs = t;
        }
        if let Some(r) = self.retries {
            ep.retries = r;
        }
        if let Some(k) = self.top_k {
            ep.logprob_top_k = k;
        }
        if let Some(env) = &self.api_key_env {
            ep.api_key_env.clone_from(env);
        }
        if self.system_prompt.is_some() {
            ep.system_prompt.clone_from(&self.system_prompt);
        }
        if self.dataset.is_some() {
            cfg.paths.dataset.clone_from(&self.dataset);
        }
        if self.out.is_some() {
            cfg.paths.out.clone_from(&self.out);
        }
        if let Some(m) = self.mode {
            cfg.eval.mode = m;
        }
        if let Some(d) = self.decision {
            cfg.eval.decision = d;
        }
        if self.checkpoint.is_some() {
            cfg.eval.checkpoint.clone_from(&self.checkpoint);
        }
        if self.image_root.is_some() {
            cfg.eval.image_root.clone_from(&self.image_root);
        }
    }
}

pub fn run(args: &EvalArgs, mut cfg: PipelineConfig) -> CliResult<()> {
    args.apply(&mut cfg);
    let dataset = load_dataset(&require(&cfg.paths.dataset, "dataset")?)?;
    let dir = cfg.out_dir();
    let mode = cfg.eval.mode;
    if let Some(root) = &cfg.eval.image_root {
        if !root.is_dir() {
            return Err(config_error(format!("image root {} is not a directory", root.display())));
        }
    }
    let opts = RunOptions {
        decision: cfg.eval.decision,
        checkpoint: Some(
            cfg.eval
                .checkpoint
                .clone()
                .unwrap_or_else(|| dir.join(format!("checkpoint.{mode}.ndjson"))),
        ),
        image_root: cfg.eval.image_root.clone(),
    };
    if let Some(parent) = opts.checkpoint.as_deref().and_then(Path::parent) {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))
                .data()?;
        }
    }
    let endpoint = Endpoint::new(cfg.endpoint.clone())?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .data()?;
    let run = runtime.block_on(run_eval(&dataset, &endpoint, mode, &opts))?;

    let prov = Provenance::new("eval", &cfg);
    let file = RunFile {
        provenance: prov.clone(),
        run,
    };
    write_json(&dir.join(format!("run.{mode}.json")), &file)?;
    let report = write_metrics(&dir, &prov, &file.run)?;
    print_summary(&file.run, &report);
    Ok(())
}
