use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use taxoprobe_core::dataset::{digest, to_ndjson};
use taxoprobe_core::pipeline::{build_dataset, BuildManifest};
use taxoprobe_core::scene::load_scene_graphs;

use super::{load_taxonomy, DatasetFile};
use crate::config::{require, write_file, write_json, PipelineConfig, Provenance};
use crate::error::{Classify, CliResult};

pub const DATASET_FILE: &str = "dataset.ndjson";
pub const MANIFEST_FILE: &str = "build_manifest.json";

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Scene-graph JSON file or directory of them.
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Dataset seed. Also the negative seed unless --negative-seed is given.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub negative_seed: Option<u64>,
    #[arg(long)]
    pub per_scene_quota: Option<usize>,
    #[arg(long)]
    pub max_objects: Option<usize>,
    /// Keep the depth-0 negatives at every substitution depth.
    #[arg(long)]
    pub reuse_negatives: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BuildArgs {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if self.scenes.is_some() {
            cfg.paths.scenes.clone_from(&self.scenes);
        }
        if self.taxonomy.is_some() {
            cfg.paths.taxonomy.clone_from(&self.taxonomy);
        }
        if self.out.is_some() {
            cfg.paths.out.clone_from(&self.out);
        }
        if let Some(s) = self.seed {
            cfg.seeds.dataset = s;
            cfg.seeds.negatives = s;
        }
        if let Some(s) = self.negative_seed {
            cfg.seeds.negatives = s;
        }
        if let Some(q) = self.per_scene_quota {
            cfg.build.per_scene_quota = q;
        }
        if let Some(m) = self.max_objects {
            cfg.build.max_objects = m;
        }
        if self.reuse_negatives {
            cfg.build.resample_negatives_per_depth = false;
        }
    }
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    provenance: Provenance,
    dataset: DatasetFile,
    manifest: &'a BuildManifest,
}

pub fn run(args: &BuildArgs, mut cfg: PipelineConfig) -> CliResult<()> {
    args.apply(&mut cfg);
    let scenes_path = require(&cfg.paths.scenes, "scenes")?;
    let taxonomy_path = require(&cfg.paths.taxonomy, "taxonomy")?;
    let t = load_taxonomy(&taxonomy_path)?;
    let scenes = load_scene_graphs(&scenes_path).data()?;
    let out = build_dataset(&scenes, &t, &cfg.build_config()).data()?;

    let text = to_ndjson(&out.instances);
    let dir = cfg.out_dir();
    write_file(&dir.join(DATASET_FILE), &text)?;
    let file = ManifestFile {
        provenance: Provenance::new("build", &cfg),
        dataset: DatasetFile {
            file: DATASET_FILE.into(),
            sha256: digest(&text),
            n_instances: out.instances.len(),
        },
        manifest: &out.manifest,
    };
    write_json(&dir.join(MANIFEST_FILE), &file)?;
    let m = &out.manifest;
    println!(
        "{} scenes ({} accepted): {} positives ({} leaf, {} substituted), {} questions -> {}",
        m.n_scenes,
        m.n_scenes_accepted,
        m.n_positive,
        m.n_leaf,
        m.n_substituted,
        m.n_total,
        dir.join(DATASET_FILE).display()
    );
    Ok(())
}
