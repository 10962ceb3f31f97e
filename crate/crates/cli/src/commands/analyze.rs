use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use taxoprobe_core::dump::{list_dumps, read_dump};
use taxoprobe_core::metrics::by_pair;
use taxoprobe_core::repranalysis::{
    hierarchy_rsa_report, layerwise_odds_report, rows_csv, separability_report, square_matrix_csv,
    static_delta_report, visual_similarity_report, DumpRef, HierarchyRsaOptions, SeparabilityOptions,
    StaticDeltaOptions, VisualOptions,
};
use taxoprobe_core::{DumpRole, EmbeddingDump, Taxonomy};
use taxoprobe_eval::EvalRun;

use super::{file_stem, load_run, load_taxonomy};
use crate::config::{require, write_csv, write_json, PipelineConfig, Provenance, REPORTS};
use crate::error::{config_error, data_error, Classify, CliResult};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Directory of `<name>.manifest.json` + `<name>.f32` dumps.
    #[arg(long)]
    pub dumps: Option<PathBuf>,
    /// Run file from `eval`; needed by the odds and visual reports.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Needed by the rsa, delta and visual reports.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Comma-separated subset of rsa,delta,odds,separability,visual.
    #[arg(long, value_delimiter = ',')]
    pub reports: Option<Vec<String>>,
    /// Model id of the vision-language side of the rsa and delta comparisons.
    #[arg(long)]
    pub vlm_model: Option<String>,
    #[arg(long)]
    pub lm_model: Option<String>,
    /// Analysis seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl AnalyzeArgs {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if self.dumps.is_some() {
            cfg.paths.dumps.clone_from(&self.dumps);
        }
        if self.run.is_some() {
            cfg.paths.run.clone_from(&self.run);
        }
        if self.taxonomy.is_some() {
            cfg.paths.taxonomy.clone_from(&self.taxonomy);
        }
        if self.out.is_some() {
            cfg.paths.out.clone_from(&self.out);
        }
        if let Some(r) = &self.reports {
            cfg.analysis.reports = r.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        if self.vlm_model.is_some() {
            cfg.analysis.vlm_model.clone_from(&self.vlm_model);
        }
        if self.lm_model.is_some() {
            cfg.analysis.lm_model.clone_from(&self.lm_model);
        }
        if let Some(s) = self.seed {
            cfg.seeds.analysis = s;
        }
    }
}

/// Index of everything one `analyze` call wrote.
#[derive(Serialize)]
struct AnalysisIndex<'a> {
    provenance: &'a Provenance,
    dumps: Vec<DumpRef>,
    files: &'a [String],
}

#[derive(Serialize)]
struct Report<'a, T> {
    provenance: &'a Provenance,
    report: &'a T,
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    dir: PathBuf,
    prov: Provenance,
    dumps: Vec<EmbeddingDump>,
    written: Vec<String>,
}

impl Ctx<'_> {
    fn json<T: Serialize>(&mut self, name: &str, report: &T) -> CliResult<()> {
        write_json(
            &self.dir.join(name),
            &Report {
                provenance: &self.prov,
                report,
            },
        )?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, body: &str) -> CliResult<()> {
        write_csv(&self.dir.join(name), &self.prov, body)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn with_role(&self, role: DumpRole) -> Vec<&EmbeddingDump> {
        self.dumps.iter().filter(|d| d.manifest.role == role).collect()
    }

    /// The (vlm, lm) dumps of a role. With exactly two models, one flag
    /// settles the other.
    fn model_pair(&self, role: DumpRole, report: &str) -> CliResult<(EmbeddingDump, EmbeddingDump)> {
        let dumps = self.with_role(role);
        let mut models: Vec<&str> = dumps.iter().map(|d| d.manifest.model_id.as_str()).collect();
        models.sort_unstable();
        models.dedup();
        let (vlm, lm) = (self.cfg.analysis.vlm_model.as_deref(), self.cfg.analysis.lm_model.as_deref());
        let other = |m: &str| models.iter().copied().find(|x| *x != m);
        let (vlm, lm) = match (vlm, lm) {
            (Some(v), Some(l)) => (v, l),
            (Some(v), None) if models.len() == 2 => (v, other(v).unwrap_or(v)),
            (None, Some(l)) if models.len() == 2 => (other(l).unwrap_or(l), l),
            _ if models.len() < 2 => {
                return Err(data_error(format!(
                    "{report} needs {role:?} dumps of two models, found {}",
                    models.len()
                )))
            }
            _ => {
                return Err(config_error(format!(
                    "{report}: cannot tell the vlm from the lm among {{{}}}; set --vlm-model and --lm-model",
                    models.join(", ")
                )))
            }
        };
        let pick = |model: &str| -> CliResult<EmbeddingDump> {
            let found: Vec<&&EmbeddingDump> = dumps.iter().filter(|d| d.manifest.model_id == model).collect();
            match found.as_slice() {
                [d] => Ok((**d).clone()),
                [] => Err(data_error(format!("{report}: no {role:?} dump for model `{model}`"))),
                _ => Err(data_error(format!("{report}: several {role:?} dumps for model `{model}`"))),
            }
        };
        Ok((pick(vlm)?, pick(lm)?))
    }
}

fn required_run(cfg: &PipelineConfig, report: &str) -> CliResult<EvalRun> {
    let path = require(&cfg.paths.run, &format!("run (for {report})"))?;
    Ok(load_run(&path)?.run)
}

fn required_taxonomy(cfg: &PipelineConfig, report: &str) -> CliResult<Taxonomy> {
    load_taxonomy(&require(&cfg.paths.taxonomy, &format!("taxonomy (for {report})"))?)
}

fn load_dumps(dir: &Path) -> CliResult<Vec<EmbeddingDump>> {
    let paths = list_dumps(dir).data()?;
    if paths.is_empty() {
        return Err(data_error(format!("no dumps in {}", dir.display())));
    }
    paths.iter().map(|p| read_dump(p).data()).collect()
}

/// Every taxonomy concept with the leaves below it.
fn membership(t: &Taxonomy) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for c in t.chains() {
        for h in &c.chain {
            out.entry(h.id.clone()).or_default().push(c.leaf.id.clone());
        }
    }
    out
}

fn rsa(ctx: &mut Ctx) -> CliResult<()> {
    let t = required_taxonomy(ctx.cfg, "rsa")?;
    let (vlm, lm) = ctx.model_pair(DumpRole::Unembedding, "rsa")?;
    let a = &ctx.cfg.analysis;
    let opts = HierarchyRsaOptions {
        subsets: a.rsa_subsets,
        subset_size: a.rsa_subset_size,
        seed: ctx.cfg.seeds.analysis,
        ridge: a.ridge,
    };
    let report = hierarchy_rsa_report(&vlm, &lm, &t, opts).data()?;
    ctx.json("rsa.json", &report)?;
    if let Some(m) = &report.matrices {
        ctx.csv("rsa.vlm_similarity.csv", &square_matrix_csv(&m.vlm))?;
        ctx.csv("rsa.lm_similarity.csv", &square_matrix_csv(&m.lm))?;
        ctx.csv("rsa.taxonomy_similarity.csv", &square_matrix_csv(&m.taxonomy))?;
    }
    Ok(())
}

fn delta(ctx: &mut Ctx) -> CliResult<()> {
    let t = required_taxonomy(ctx.cfg, "delta")?;
    let (vlm, lm) = ctx.model_pair(DumpRole::Static, "delta")?;
    let opts = StaticDeltaOptions {
        negatives_per_pair: ctx.cfg.analysis.negatives_per_pair,
        seed: ctx.cfg.seeds.analysis,
    };
    let report = static_delta_report(&vlm, &lm, &t, opts).data()?;
    ctx.json("delta.json", &report)?;
    ctx.csv("delta.pairs.csv", &rows_csv(&report.rows))
}

fn odds(ctx: &mut Ctx) -> CliResult<()> {
    let run = required_run(ctx.cfg, "odds")?;
    let mut by_model: BTreeMap<String, Vec<EmbeddingDump>> = BTreeMap::new();
    for d in ctx.with_role(DumpRole::LayerwiseContextual) {
        by_model.entry(d.manifest.model_id.clone()).or_default().push(d.clone());
    }
    if by_model.is_empty() {
        return Err(data_error("odds needs LayerwiseContextual dumps, found none"));
    }
    for (model, dumps) in by_model {
        let report = layerwise_odds_report(&dumps, &run.results).data()?;
        let stem = file_stem(&model);
        ctx.json(&format!("odds.{stem}.json"), &report)?;
        ctx.csv(&format!("odds.{stem}.layers.csv"), &rows_csv(&report.layers))?;
        ctx.csv(&format!("odds.{stem}.features.csv"), &rows_csv(&report.features))?;
    }
    Ok(())
}

fn separability(ctx: &mut Ctx) -> CliResult<()> {
    let dumps: Vec<EmbeddingDump> = ctx.with_role(DumpRole::QuestionFinal).into_iter().cloned().collect();
    if dumps.is_empty() {
        return Err(data_error("separability needs QuestionFinal dumps, found none"));
    }
    let opts = SeparabilityOptions {
        c: ctx.cfg.analysis.svm_c,
        iterations: ctx.cfg.analysis.svm_iterations,
    };
    for d in &dumps {
        let report = separability_report(d, opts).data()?;
        let stem = file_stem(&d.name);
        ctx.json(&format!("separability.{stem}.json"), &report)?;
        ctx.csv(&format!("separability.{stem}.pca.csv"), &rows_csv(&report.points))?;
    }
    Ok(())
}

fn visual(ctx: &mut Ctx) -> CliResult<()> {
    let t = required_taxonomy(ctx.cfg, "visual")?;
    let run = required_run(ctx.cfg, "visual")?;
    let dumps: Vec<EmbeddingDump> = ctx.with_role(DumpRole::VisionPatch).into_iter().cloned().collect();
    if dumps.is_empty() {
        return Err(data_error("visual needs VisionPatch dumps, found none"));
    }
    let set = run.instance_set().data()?;
    let cond_acc: BTreeMap<(String, String), f64> = by_pair(&set)
        .into_iter()
        .map(|r| ((r.hyponym, r.hypernym), r.conditional))
        .collect();
    let members = membership(&t);
    let opts = VisualOptions {
        exclude_leaf: ctx.cfg.analysis.exclude_leaf,
    };
    for d in &dumps {
        let report = visual_similarity_report(d, &members, &cond_acc, opts).data()?;
        let stem = file_stem(&d.name);
        ctx.json(&format!("visual.{stem}.json"), &report)?;
        ctx.csv(&format!("visual.{stem}.pairs.csv"), &rows_csv(&report.records))?;
        ctx.csv(&format!("visual.{stem}.cohesion.csv"), &rows_csv(&report.cohesion))?;
    }
    Ok(())
}

pub fn run(args: &AnalyzeArgs, mut cfg: PipelineConfig) -> CliResult<()> {
    args.apply(&mut cfg);
    let reports = cfg.analysis.reports.clone();
    if reports.is_empty() {
        return Err(config_error("no reports requested"));
    }
    if let Some(bad) = reports.iter().find(|r| !REPORTS.contains(&r.as_str())) {
        return Err(config_error(format!(
            "unknown report `{bad}` (expected one of {})",
            REPORTS.join(", ")
        )));
    }
    let dumps = load_dumps(&require(&cfg.paths.dumps, "dumps")?)?;
    let mut ctx = Ctx {
        cfg: &cfg,
        dir: cfg.out_dir(),
        prov: Provenance::new("analyze", &cfg),
        dumps,
        written: Vec::new(),
    };
    for r in REPORTS.iter().filter(|r| reports.iter().any(|x| x == *r)) {
        match *r {
            "rsa" => rsa(&mut ctx)?,
            "delta" => delta(&mut ctx)?,
            "odds" => odds(&mut ctx)?,
            "separability" => separability(&mut ctx)?,
            "visual" => visual(&mut ctx)?,
            _ => unreachable!("checked above"),
        }
    }
    let index = AnalysisIndex {
        provenance: &ctx.prov,
        dumps: ctx.dumps.iter().map(DumpRef::from).collect(),
        files: &ctx.written,
    };
    write_json(&ctx.dir.join("analysis.json"), &index)?;
    for f in &ctx.written {
        println!("{}", ctx.dir.join(f).display());
    }
    Ok(())
}
