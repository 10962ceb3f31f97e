use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use taxoprobe_core::dataset::{digest, to_ndjson};
use taxoprobe_core::questgen::{generate_taxomps, SkippedPair};

use super::{load_taxonomy, DatasetFile};
use crate::config::{require, write_file, write_json, PipelineConfig, Provenance};
use crate::error::{data_error, CliResult};

pub const DATASET_FILE: &str = "taxomps.ndjson";
pub const MANIFEST_FILE: &str = "taxomps_manifest.json";

#[derive(Debug, Args)]
pub struct TaxompsArgs {
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long)]
    pub negative_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ManifestFile {
    provenance: Provenance,
    dataset: DatasetFile,
    n_pairs: usize,
    n_questions: usize,
    skipped: Vec<SkippedPair>,
}

pub fn run(args: &TaxompsArgs, mut cfg: PipelineConfig) -> CliResult<()> {
    if args.taxonomy.is_some() {
        cfg.paths.taxonomy.clone_from(&args.taxonomy);
    }
    if args.out.is_some() {
        cfg.paths.out.clone_from(&args.out);
    }
    if let Some(s) = args.negative_seed {
        cfg.seeds.negatives = s;
    }
    let t = load_taxonomy(&require(&cfg.paths.taxonomy, "taxonomy")?)?;
    let (instances, skipped) = generate_taxomps(&t, cfg.seeds.negatives);
    if instances.is_empty() {
        return Err(data_error("the taxonomy yields no hyponym-hypernym pairs with enough negatives"));
    }
    let text = to_ndjson(&instances);
    let dir = cfg.out_dir();
    write_file(&dir.join(DATASET_FILE), &text)?;
    let n_questions = instances.iter().map(|i| 1 + i.negatives.len()).sum();
    write_json(
        &dir.join(MANIFEST_FILE),
        &ManifestFile {
            provenance: Provenance::new("taxomps", &cfg),
            dataset: DatasetFile {
                file: DATASET_FILE.into(),
                sha256: digest(&text),
                n_instances: instances.len(),
            },
            n_pairs: instances.len(),
            n_questions,
            skipped,
        },
    )?;
    println!(
        "{} pairs, {} questions -> {}",
        instances.len(),
        n_questions,
        dir.join(DATASET_FILE).display()
    );
    Ok(())
}
