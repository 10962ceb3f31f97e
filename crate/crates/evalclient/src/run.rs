use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use futures::StreamExt;
use serde::{Deserialize, Serialize};
use taxoprobe_core::dataset::{digest, to_ndjson};
use taxoprobe_core::dump::sha256_hex;
use taxoprobe_core::questgen::NEGATIVES_PER_QUESTION;
use taxoprobe_core::{Gold, InstanceResult, InstanceSet, QAInstance};

use crate::prompt::{build_prompt, Prompt, Slot};
use crate::score::decide;
use crate::{Decision, Endpoint, EndpointConfig, EvalError, Mode, Result, YesNoScore};

/// One scored question. `score` and `answer` are absent on abstention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub instance_id: String,
    pub slot: Slot,
    pub gold: Gold,
    pub answer: Option<Gold>,
    pub correct: bool,
    pub abstained: bool,
    pub score: Option<YesNoScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub run_id: String,
    pub mode: Mode,
    pub model: String,
    pub decision: Decision,
    pub dataset_digest: String,
    pub n_questions: usize,
    pub n_abstentions: usize,
    /// Sorted by instance id, then positive, neg1..neg4.
    pub records: Vec<ScoreRecord>,
    /// One per instance, sorted by instance id.
    pub results: Vec<InstanceResult>,
}

impl EvalRun {
    pub fn instance_set(&self) -> Result<InstanceSet> {
        Ok(InstanceSet::from_results(self.results.iter().cloned())?)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub decision: Decision,
    /// NDJSON file receiving one line per scored question; existing lines of
    /// the same run are reused instead of re-queried.
    pub checkpoint: Option<PathBuf>,
    /// Directory that vqa image references are relative to.
    pub image_root: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointLine {
    run_id: String,
    record: ScoreRecord,
}

type Key = (String, Slot);

/// Stable identity of a run: same dataset, model, mode, decision rule and
/// request settings give the same id.
pub fn run_id(dataset_digest: &str, cfg: &EndpointConfig, mode: Mode, decision: Decision) -> String {
    let material = format!(
        "taxoprobe-eval/1\n{dataset_digest}\n{}\n{mode}\n{decision}\n{}\n{}",
        cfg.model_name,
        cfg.logprob_top_k,
        cfg.system_prompt.as_deref().unwrap_or("")
    );
    sha256_hex(material.as_bytes())[..16].to_string()
}

fn checkpoint_error(path: &Path, message: impl Into<String>) -> EvalError {
    EvalError::Checkpoint {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads the complete lines of a checkpoint. A trailing line without its
/// newline (a write cut short) is dropped and truncated away.
fn load_checkpoint(path: &Path, run_id: &str, golds: &BTreeMap<Key, Gold>) -> Result<BTreeMap<Key, ScoreRecord>> {
    let mut done = BTreeMap::new();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(checkpoint_error(path, e.to_string())),
    };
    let complete_len = text.rfind('\n').map_or(0, |i| i + 1);
    if complete_len < text.len() {
        tracing::warn!(path = %path.display(), "dropping partial trailing checkpoint line");
        OpenOptions::new()
            .write(true)
            .open(path)
            .and_then(|f| f.set_len(complete_len as u64))
            .map_err(|e| checkpoint_error(path, e.to_string()))?;
    }
    for (i, line) in text[..complete_len].lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: CheckpointLine =
            serde_json::from_str(line).map_err(|e| checkpoint_error(path, format!("line {}: {e}", i + 1)))?;
        if entry.run_id != run_id {
            return Err(checkpoint_error(
                path,
                format!("line {} belongs to run {}, not {run_id}", i + 1, entry.run_id),
            ));
        }
        let r = entry.record;
        let key = (r.instance_id.clone(), r.slot);
        match golds.get(&key) {
            None => {
                return Err(checkpoint_error(
                    path,
                    format!("line {}: no question {}/{} in the dataset", i + 1, key.0, key.1),
                ))
            }
            Some(&g) if g != r.gold => {
                return Err(checkpoint_error(path, format!("line {}: gold differs from the dataset", i + 1)))
            }
            Some(_) => {}
        }
        if done.insert(key, r).is_some() {
            return Err(checkpoint_error(path, format!("line {}: question scored twice", i + 1)));
        }
    }
    Ok(done)
}

fn append(file: &mut File, run_id: &str, record: &ScoreRecord) -> Result<()> {
    let line = CheckpointLine {
        run_id: run_id.to_string(),
        record: record.clone(),
    };
    let mut text = serde_json::to_string(&line).expect("score records serialize");
    text.push('\n');
    file.write_all(text.as_bytes())?;
    file.flush()?;
    Ok(())
}

struct Job {
    key: Key,
    gold: Gold,
    prompt: Prompt,
}

fn record_for(job: &Job, outcome: Result<YesNoScore>, decision: Decision) -> Result<ScoreRecord> {
    let (instance_id, slot) = job.key.clone();
    match outcome {
        Ok(score) => {
            let answer = decide(&score, decision, &format!("{instance_id}/{slot}"));
            Ok(ScoreRecord {
                instance_id,
                slot,
                gold: job.gold,
                answer: Some(answer),
                correct: answer == job.gold,
                abstained: false,
                score: Some(score),
            })
        }
        Err(EvalError::Abstention { tokens }) => {
            tracing::debug!(%instance_id, %slot, ?tokens, "abstention");
            Ok(ScoreRecord {
                instance_id,
                slot,
                gold: job.gold,
                answer: None,
                correct: false,
                abstained: true,
                score: None,
            })
        }
        Err(e) => Err(e),
    }
}

/// Scores every question of `dataset` once, at most `max_in_flight` at a
/// time. Records and results are ordered by key, never by completion. On an
/// endpoint failure the checkpoint keeps every record finished so far.
pub async fn run_eval(dataset: &[QAInstance], endpoint: &Endpoint, mode: Mode, opts: &RunOptions) -> Result<EvalRun> {
    if dataset.is_empty() {
        return Err(EvalError::Dataset("no instances".into()));
    }
    let mut ids = BTreeSet::new();
    for inst in dataset {
        if !ids.insert(inst.instance_id.as_str()) {
            return Err(EvalError::Dataset(format!("duplicate instance id `{}`", inst.instance_id)));
        }
        if inst.negatives.len() != NEGATIVES_PER_QUESTION {
            return Err(EvalError::Dataset(format!(
                "instance `{}` has {} negatives, expected {NEGATIVES_PER_QUESTION}",
                inst.instance_id,
                inst.negatives.len()
            )));
        }
    }
    let cfg = endpoint.config();
    let dataset_digest = digest(&to_ndjson(dataset));
    let run_id = run_id(&dataset_digest, cfg, mode, opts.decision);

    let mut jobs = Vec::new();
    for inst in dataset {
        for slot in Slot::all() {
            let prompt = build_prompt(inst, slot, mode)?;
            let gold = slot.question(inst).expect("slot checked above").gold;
            jobs.push(Job {
                key: (inst.instance_id.clone(), slot),
                gold,
                prompt,
            });
        }
    }
    let golds: BTreeMap<Key, Gold> = jobs.iter().map(|j| (j.key.clone(), j.gold)).collect();

    let mut done = match &opts.checkpoint {
        Some(path) => load_checkpoint(path, &run_id, &golds)?,
        None => BTreeMap::new(),
    };
    let mut sink = match &opts.checkpoint {
        Some(path) => Some(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| checkpoint_error(path, e.to_string()))?,
        ),
        None => None,
    };
    let pending: Vec<Job> = jobs.into_iter().filter(|j| !done.contains_key(&j.key)).collect();
    tracing::info!(%run_id, total = golds.len(), resumed = done.len(), pending = pending.len(), "scoring");

    let image_root = opts.image_root.as_deref();
    let mut stream = futures::stream::iter(pending)
        .map(|job| async move {
            let outcome = endpoint.score_yes_no(&job.prompt, image_root).await;
            (job, outcome)
        })
        .buffer_unordered(cfg.max_in_flight);
    let mut failure = None;
    while let Some((job, outcome)) = stream.next().await {
        match record_for(&job, outcome, opts.decision) {
            Ok(record) => {
                if let Some(f) = sink.as_mut() {
                    append(f, &run_id, &record)?;
                }
                done.insert(job.key, record);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    drop(stream);
    if let Some(e) = failure {
        tracing::error!(completed = done.len(), total = golds.len(), "run aborted");
        return Err(e);
    }

    let records: Vec<ScoreRecord> = done.into_values().collect();
    let mut by_id: BTreeMap<&str, &QAInstance> = BTreeMap::new();
    for inst in dataset {
        by_id.insert(&inst.instance_id, inst);
    }
    let results = records
        .chunks(1 + NEGATIVES_PER_QUESTION)
        .map(|chunk| {
            let inst = by_id[chunk[0].instance_id.as_str()];
            InstanceResult {
                instance_id: inst.instance_id.clone(),
                positive_correct: chunk[0].correct,
                negatives_correct: chunk[1..].iter().map(|r| r.correct).collect(),
                substitution_depth: inst.substitution_depth,
                source_leaf: inst.source_leaf.clone(),
                target: inst.positive.target.clone(),
                positive_gold: inst.positive.gold,
                parent_instance_id: inst.parent_instance_id.clone(),
            }
        })
        .collect();
    Ok(EvalRun {
        run_id,
        mode,
        model: cfg.model_name.clone(),
        decision: opts.decision,
        dataset_digest,
        n_questions: records.len(),
        n_abstentions: records.iter().filter(|r| r.abstained).count(),
        records,
        results,
    })
}
