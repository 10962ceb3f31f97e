use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde::{Deserialize, Serialize};
use taxoprobe_core::dump::sha256_hex;
use taxoprobe_core::pipeline::BuildConfig;
use taxoprobe_core::repranalysis::{HierarchyRsaOptions, SeparabilityOptions, StaticDeltaOptions, VisualOptions};
use taxoprobe_eval::{Decision, EndpointConfig, Mode};

use crate::error::{config_error, Classify, CliResult};

pub const REPORTS: [&str; 5] = ["rsa", "delta", "odds", "separability", "visual"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub scenes: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub dumps: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub run: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub dataset: u64,
    pub negatives: u64,
    pub analysis: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    pub max_objects: usize,
    pub per_scene_quota: usize,
    pub resample_negatives_per_depth: bool,
}

impl Default for BuildSection {
    fn default() -> Self {
        let d = BuildConfig::default();
        Self {
            max_objects: d.max_objects,
            per_scene_quota: d.per_scene_quota,
            resample_negatives_per_depth: d.resample_negatives_per_depth,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub mode: Mode,
    pub decision: Decision,
    pub checkpoint: Option<PathBuf>,
    pub image_root: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub reports: Vec<String>,
    /// Model ids telling apart the two dumps compared by `rsa` and `delta`.
    pub vlm_model: Option<String>,
    pub lm_model: Option<String>,
    pub rsa_subsets: usize,
    pub rsa_subset_size: usize,
    pub ridge: bool,
    pub negatives_per_pair: usize,
    pub svm_c: f64,
    pub svm_iterations: usize,
    pub exclude_leaf: bool,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let rsa = HierarchyRsaOptions::default();
        let svm = SeparabilityOptions::default();
        Self {
            reports: REPORTS.iter().map(|r| r.to_string()).collect(),
            vlm_model: None,
            lm_model: None,
            rsa_subsets: rsa.subsets,
            rsa_subset_size: rsa.subset_size,
            ridge: rsa.ridge,
            negatives_per_pair: StaticDeltaOptions::default().negatives_per_pair,
            svm_c: svm.c,
            svm_iterations: svm.iterations,
            exclude_leaf: VisualOptions::default().exclude_leaf,
        }
    }
}

/// Everything a run depends on. Loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub seeds: Seeds,
    pub build: BuildSection,
    pub endpoint: EndpointConfig,
    pub eval: EvalSection,
    pub analysis: AnalysisSection,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .config()?;
        toml::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))
            .config()
    }

    /// SHA-256 of the effective configuration as canonical JSON. Neither the
    /// API key nor the output directory is part of it.
    pub fn digest(&self) -> String {
        let mut cfg = self.clone();
        cfg.paths.out = None;
        sha256_hex(serde_json::to_string(&cfg).expect("config serializes").as_bytes())
    }

    pub fn build_config(&self) -> BuildConfig {
        BuildConfig {
            max_objects: self.build.max_objects,
            per_scene_quota: self.build.per_scene_quota,
            dataset_seed: self.seeds.dataset,
            negative_seed: self.seeds.negatives,
            resample_negatives_per_depth: self.build.resample_negatives_per_depth,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// An input path that must be set and exist.
pub fn require(path: &Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let p = path
        .clone()
        .ok_or_else(|| config_error(format!("no {what} given (flag or [paths] {what})")))?;
    if !p.exists() {
        return Err(config_error(format!("{what} {} does not exist", p.display())));
    }
    Ok(p)
}

/// Names the command, configuration and seeds behind an output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_digest: String,
    pub seeds: Seeds,
}

impl Provenance {
    pub fn new(command: &str, cfg: &PipelineConfig) -> Self {
        Self {
            tool: "taxoprobe".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_digest: cfg.digest(),
            seeds: cfg.seeds,
        }
    }

    pub fn csv_comment(&self) -> String {
        format!(
            "# {} {} {} config_digest={} seeds=dataset:{},negatives:{},analysis:{}\n",
            self.tool,
            self.version,
            self.command,
            self.config_digest,
            self.seeds.dataset,
            self.seeds.negatives,
            self.seeds.analysis
        )
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .data()?;
    }
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .data()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_file(path, &text)
}

/// CSV body preceded by a `#` provenance line.
pub fn write_csv(path: &Path, prov: &Provenance, body: &str) -> CliResult<()> {
    write_file(path, &format!("{}{body}", prov.csv_comment()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_the_default() {
        let cfg: PipelineConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }

    #[test]
    fn sections_parse() {
        let cfg: PipelineConfig = toml::from_str(
            r#"
            [paths]
            scenes = "fixtures/scenes"
            [seeds]
            dataset = 7
            negatives = 11
            [endpoint]
            base_url = "http://localhost:9/v1"
            model_name = "m"
            max_in_flight = 2
            [eval]
            mode = "question_only"
            decision = "sample(4)"
            [analysis]
            reports = ["rsa", "odds"]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seeds.negatives, 11);
        assert_eq!(cfg.eval.mode, Mode::QuestionOnly);
        assert_eq!(cfg.eval.decision, Decision::Sample(4));
        assert_eq!(cfg.endpoint.max_in_flight, 2);
        assert_eq!(cfg.analysis.reports, ["rsa", "odds"]);
        assert!(toml::from_str::<PipelineConfig>("[seeds]\nsurprise = 1").is_err());
    }

    #[test]
    fn digest_tracks_content_not_the_key() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.endpoint.api_key = Some("sk-123".into());
        b.paths.out = Some("elsewhere".into());
        assert_eq!(a.digest(), b.digest());
        b.seeds.dataset = 1;
        assert_ne!(a.digest(), b.digest());
    }
}
