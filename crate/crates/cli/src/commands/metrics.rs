use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use taxoprobe_core::metrics::{by_depth, by_pair, metrics_report, DepthRow};
use taxoprobe_core::repranalysis::rows_csv;
use taxoprobe_core::MetricsReport;
use taxoprobe_eval::EvalRun;

use super::load_run;
use crate::config::{require, write_csv, write_json, PipelineConfig, Provenance};
use crate::error::{Classify, CliResult};

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// A `run.<mode>.json` written by `eval`.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Defaults to the directory holding the run file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    provenance: &'a Provenance,
    run_id: &'a str,
    mode: String,
    model: &'a str,
    metrics: &'a MetricsReport,
    by_depth: &'a [DepthRow],
}

/// Writes `metrics.<mode>.json` plus per-depth and per-pair CSV tables.
pub fn write_metrics(dir: &Path, prov: &Provenance, run: &EvalRun) -> CliResult<MetricsReport> {
    let set = run.instance_set().data()?;
    let report = metrics_report(&set).data()?;
    let depth = by_depth(&set);
    let mode = run.mode.as_str();
    write_json(
        &dir.join(format!("metrics.{mode}.json")),
        &MetricsFile {
            provenance: prov,
            run_id: &run.run_id,
            mode: mode.into(),
            model: &run.model,
            metrics: &report,
            by_depth: &depth,
        },
    )?;
    write_csv(&dir.join(format!("by_depth.{mode}.csv")), prov, &rows_csv(&depth))?;
    write_csv(&dir.join(format!("by_pair.{mode}.csv")), prov, &rows_csv(&by_pair(&set)))?;
    Ok(report)
}

pub fn print_summary(run: &EvalRun, m: &MetricsReport) {
    let conditional = m.conditional.map_or_else(|| "n/a".to_string(), |c| format!("{c:.4}"));
    println!(
        "run {} ({} {}): overall {:.4}, conditional {conditional}, hierarchical consistency {:.4}; {} originals, {} substituted, {} abstentions",
        run.run_id,
        run.model,
        run.mode,
        m.overall,
        m.hierarchical_consistency,
        m.n_originals,
        m.n_substituted,
        run.n_abstentions
    );
}

pub fn run(args: &MetricsArgs, mut cfg: PipelineConfig) -> CliResult<()> {
    if args.run.is_some() {
        cfg.paths.run.clone_from(&args.run);
    }
    let run_path = require(&cfg.paths.run, "run")?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.paths.out.clone())
        .or_else(|| run_path.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    cfg.paths.out = Some(dir.clone());
    let file = load_run(&run_path)?;
    let report = write_metrics(&dir, &Provenance::new("metrics", &cfg), &file.run)?;
    print_summary(&file.run, &report);
    Ok(())
}
