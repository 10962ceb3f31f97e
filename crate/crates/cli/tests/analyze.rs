mod common;

use std::fs;
use std::path::Path;

use common::{code, fixtures, path, stderr, stdout, taxoprobe};
use serde_json::{json, Value};
use taxoprobe_core::dump::{manifest_path, payload_path, write_dump};
use taxoprobe_core::stats::Matrix;
use taxoprobe_core::synthetic::{odds_fixture, question_final_dump, static_dump, unembedding_dump, DumpDraft};
use taxoprobe_core::{DumpManifest, DumpRole, Gold, InstanceResult, RowMeta, Taxonomy};

fn taxonomy() -> Taxonomy {
    fs::read_to_string(fixtures().join("taxonomy.txt")).unwrap().parse().unwrap()
}

fn write(dir: &Path, d: DumpDraft) {
    write_dump(dir, &d.name, d.manifest, &d.matrix).unwrap();
}

/// Two images per leaf; leaves of one top-level hypernym share a direction.
fn vision_dump(t: &Taxonomy) -> DumpDraft {
    let dims = 6;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut meta = Vec::new();
    for (i, c) in t.chains().enumerate() {
        let top = c.chain.last().map_or(0, |h| h.id.len() % dims);
        for k in 0..2 {
            let mut v = vec![0.1 * ((i + k) % 3) as f64; dims];
            v[top] += 1.0;
            let image = format!("{}_{k}.jpg", c.leaf.id);
            labels.push(format!("{}:{image}", c.leaf.id));
            meta.push(RowMeta {
                concept: Some(c.leaf.id.clone()),
                image_id: Some(image),
                ..RowMeta::default()
            });
            rows.push(v);
        }
    }
    let matrix = Matrix::from_rows(&rows).unwrap().with_row_labels(labels.clone()).unwrap();
    let mut manifest = DumpManifest::new("synthetic-vlm", DumpRole::VisionPatch, labels, dims);
    manifest.row_meta = meta;
    DumpDraft {
        name: "vision".into(),
        manifest,
        matrix,
    }
}

/// Correct originals for every taxonomy leaf with alternating outcomes
/// along their chains.
fn taxonomy_results(t: &Taxonomy) -> Vec<InstanceResult> {
    let mut out = Vec::new();
    for c in t.chains() {
        let id = format!("v:{}", c.leaf.id);
        let base = InstanceResult {
            instance_id: id.clone(),
            positive_correct: true,
            negatives_correct: vec![true; 4],
            substitution_depth: 0,
            source_leaf: c.leaf.id.clone(),
            target: c.leaf.id.clone(),
            positive_gold: Gold::Yes,
            parent_instance_id: None,
        };
        for (d, h) in c.chain.iter().enumerate() {
            out.push(InstanceResult {
                instance_id: format!("{id}#{}", d + 1),
                positive_correct: (d + c.leaf.id.len()) % 2 == 0,
                substitution_depth: d + 1,
                target: h.id.clone(),
                parent_instance_id: Some(id.clone()),
                ..base.clone()
            });
        }
        out.push(base);
    }
    out
}

/// Dumps of every role plus a run file covering both the odds fixture and
/// the taxonomy pairs.
fn workspace(root: &Path) {
    let t = taxonomy();
    let dumps = root.join("dumps");
    fs::create_dir_all(&dumps).unwrap();
    write(&dumps, unembedding_dump("unemb-vlm", "vlm-7b", &t, 16, 0.3, 1));
    write(&dumps, unembedding_dump("unemb-lm", "lm-7b", &t, 16, 0.3, 2));
    write(&dumps, static_dump("static-vlm", "vlm-7b", &t, 16, true, 3));
    write(&dumps, static_dump("static-lm", "lm-7b", &t, 16, false, 4));
    write(&dumps, question_final_dump("questions", 40, 8, 12.0, 5));
    write(&dumps, vision_dump(&t));
    let fixture = odds_fixture(80, 3, 1, None, 6);
    for d in fixture.dumps {
        write(&dumps, d);
    }
    let mut results = fixture.results;
    results.extend(taxonomy_results(&t));
    let run = json!({
        "provenance": {
            "tool": "taxoprobe",
            "version": "0.1.0",
            "command": "eval",
            "config_digest": "0".repeat(64),
            "seeds": {"dataset": 0, "negatives": 0, "analysis": 0}
        },
        "run": {
            "run_id": "fixture",
            "mode": "text",
            "model": "synthetic-vlm",
            "decision": "argmax",
            "dataset_digest": "",
            "n_questions": 5 * results.len(),
            "n_abstentions": 0,
            "records": [],
            "results": results
        }
    });
    fs::write(root.join("run.text.json"), serde_json::to_string(&run).unwrap()).unwrap();
    fs::write(
        root.join("pipeline.toml"),
        "[analysis]\nrsa_subsets = 20\nrsa_subset_size = 30\nvlm_model = \"vlm-7b\"\nlm_model = \"lm-7b\"\n",
    )
    .unwrap();
}

fn analyze(root: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    let (config, dumps, run, taxonomy) = (
        root.join("pipeline.toml"),
        root.join("dumps"),
        root.join("run.text.json"),
        fixtures().join("taxonomy.txt"),
    );
    let mut args = vec![
        "analyze",
        "--config",
        path(&config),
        "--dumps",
        path(&dumps),
        "--run",
        path(&run),
        "--taxonomy",
        path(&taxonomy),
        "--seed",
        "9",
        "--out",
        path(out),
    ];
    args.extend_from_slice(extra);
    taxoprobe(&args)
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).unwrap()
}

#[test]
fn analyze_writes_every_report() {
    let dir = tempfile::tempdir().unwrap();
    workspace(dir.path());
    let out = dir.path().join("reports");
    let o = analyze(dir.path(), &out, &["--reports", "rsa,delta,odds,separability,visual"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let index = json_file(&out.join("analysis.json"));
    let files: Vec<&str> = index["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    let expected = [
        "rsa.json",
        "rsa.vlm_similarity.csv",
        "rsa.lm_similarity.csv",
        "rsa.taxonomy_similarity.csv",
        "delta.json",
        "delta.pairs.csv",
        "odds.synthetic-vlm.json",
        "odds.synthetic-vlm.layers.csv",
        "odds.synthetic-vlm.features.csv",
        "separability.questions.json",
        "separability.questions.pca.csv",
        "visual.vision.json",
        "visual.vision.pairs.csv",
        "visual.vision.cohesion.csv",
    ];
    assert_eq!(files, expected);
    assert_eq!(stdout(&o).lines().count(), expected.len());
    let digest = index["provenance"]["config_digest"].as_str().unwrap();
    assert_eq!(index["provenance"]["seeds"]["analysis"], 9);
    assert_eq!(index["dumps"].as_array().unwrap().len(), 9);

    for f in expected {
        let p = out.join(f);
        if f.ends_with(".json") {
            let v = json_file(&p);
            assert_eq!(v["provenance"]["config_digest"], digest, "{f}");
            assert!(v["report"].is_object(), "{f}");
        } else {
            let text = fs::read_to_string(&p).unwrap();
            let mut lines = text.lines();
            assert!(lines.next().unwrap().contains(digest), "{f}");
            let header = lines.next().unwrap();
            let width = header.split(',').count();
            assert!(width > 1, "{f}");
            let rows: Vec<&str> = lines.collect();
            assert!(!rows.is_empty(), "{f}");
            assert!(rows.iter().all(|r| r.split(',').count() == width), "{f}");
        }
    }

    let rsa = json_file(&out.join("rsa.json"));
    assert_eq!(rsa["report"]["vlm"]["model_id"], "vlm-7b");
    assert_eq!(rsa["report"]["vlm_vs_taxonomy"]["n_subsets"], 20);
    assert_eq!(rsa["report"]["options"]["seed"], 9);
    let delta = json_file(&out.join("delta.json"));
    assert!(delta["report"]["mean_delta_a"].as_f64().unwrap() > delta["report"]["mean_delta_b"].as_f64().unwrap());
    let odds = json_file(&out.join("odds.synthetic-vlm.json"));
    assert_eq!(odds["report"]["layers"].as_array().unwrap().len(), 3);
    let sep = json_file(&out.join("separability.questions.json"));
    assert_eq!(sep["report"]["svm"]["svm_error"], 0.0);
    let visual = json_file(&out.join("visual.vision.json"));
    assert!(!visual["report"]["records"].as_array().unwrap().is_empty());
    assert!(!visual["report"]["cohesion"].as_array().unwrap().is_empty());

    // same inputs, same bytes
    let again = dir.path().join("again");
    assert_eq!(code(&analyze(dir.path(), &again, &[])), 0);
    for f in expected {
        assert!(fs::read(out.join(f)).unwrap() == fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn analyze_rejects_bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    workspace(dir.path());
    let out = dir.path().join("reports");
    let o = analyze(dir.path(), &out, &["--reports", "rsa,pca"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("pca"));

    // three models and no way to pick two
    fs::write(dir.path().join("pipeline.toml"), "[analysis]\nrsa_subset_size = 30\n").unwrap();
    let t = taxonomy();
    write(&dir.path().join("dumps"), unembedding_dump("unemb-third", "third-7b", &t, 16, 0.3, 7));
    let o = analyze(dir.path(), &out, &["--reports", "rsa"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = analyze(dir.path(), &out, &["--reports", "rsa", "--vlm-model", "vlm-7b", "--lm-model", "third-7b"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json_file(&out.join("rsa.json"))["report"]["lm"]["model_id"], "third-7b");

    let o = taxoprobe(&[
        "analyze",
        "--dumps",
        path(&dir.path().join("dumps")),
        "--reports",
        "odds",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("run"), "{}", stderr(&o));

    // a corrupted payload is a data error
    let payload = payload_path(&dir.path().join("dumps"), "questions");
    let mut bytes = fs::read(&payload).unwrap();
    bytes[0] ^= 1;
    fs::write(&payload, bytes).unwrap();
    let o = analyze(dir.path(), &out, &["--reports", "separability"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn validate_dump_reports_each_file() {
    let dir = tempfile::tempdir().unwrap();
    let t = taxonomy();
    write(dir.path(), static_dump("good", "lm-7b", &t, 8, true, 1));
    write(dir.path(), static_dump("bad", "lm-7b", &t, 8, true, 2));

    let good = manifest_path(dir.path(), "good");
    for arg in [
        path(&good).to_string(),
        path(&payload_path(dir.path(), "good")).to_string(),
        path(&dir.path().join("good")).to_string(),
    ] {
        let o = taxoprobe(&["validate-dump", &arg]);
        assert_eq!(code(&o), 0, "{arg}: {}", stderr(&o));
        assert!(stdout(&o).starts_with("ok "), "{}", stdout(&o));
    }
    let o = taxoprobe(&["validate-dump", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("ok ")).count(), 2);

    let payload = payload_path(dir.path(), "bad");
    let bytes = fs::read(&payload).unwrap();
    fs::write(&payload, &bytes[..bytes.len() - 4]).unwrap();
    let o = taxoprobe(&["validate-dump", path(dir.path())]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("FAIL") && l.contains("bad") && l.contains("digest")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("ok ") && l.contains("good")), "{text}");

    let o = taxoprobe(&["validate-dump", path(&dir.path().join("missing"))]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}
