mod common;

use std::fs;

use common::{build_fixture, code, fixtures, path, stderr, stdout, taxoprobe};
use serde_json::Value;

#[test]
fn build_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let outs = ["serial", "wide", "again"].map(|n| dir.path().join(n));
    for (out, threads) in outs.iter().zip(["1", "8", "8"]) {
        let o = build_fixture(out, threads);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for file in ["dataset.ndjson", "build_manifest.json"] {
        let first = fs::read(outs[0].join(file)).unwrap();
        for other in &outs[1..] {
            assert!(first == fs::read(other.join(file)).unwrap(), "{file} differs");
        }
    }
}

#[test]
fn manifest_counts_five_questions_per_positive() {
    let dir = tempfile::tempdir().unwrap();
    let o = build_fixture(dir.path(), "2");
    assert!(stdout(&o).contains("10 scenes"), "{}", stdout(&o));
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("build_manifest.json")).unwrap()).unwrap();
    let (pos, total) = (m["manifest"]["n_positive"].as_u64().unwrap(), m["manifest"]["n_total"].as_u64().unwrap());
    assert!(pos > 0);
    assert_eq!(total, 5 * pos);
    assert_eq!(
        m["manifest"]["n_leaf"].as_u64().unwrap() + m["manifest"]["n_substituted"].as_u64().unwrap(),
        pos
    );
    let lines = fs::read_to_string(dir.path().join("dataset.ndjson")).unwrap().lines().count() as u64;
    assert_eq!(lines, pos);
    assert_eq!(m["dataset"]["n_instances"].as_u64().unwrap(), pos);
    assert_eq!(m["provenance"]["seeds"]["dataset"], 7);
    assert_eq!(m["provenance"]["seeds"]["negatives"], 7);
    assert_eq!(m["provenance"]["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn config_file_seeds_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pipeline.toml");
    fs::write(
        &cfg,
        format!(
            "[paths]\nscenes = {:?}\ntaxonomy = {:?}\n[seeds]\ndataset = 7\nnegatives = 7\n",
            path(&fixtures().join("scenes")),
            path(&fixtures().join("taxonomy.txt"))
        ),
    )
    .unwrap();
    let from_cfg = dir.path().join("cfg");
    let o = taxoprobe(&["build", "--config", path(&cfg), "--out", path(&from_cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let from_flags = dir.path().join("flags");
    assert_eq!(code(&build_fixture(&from_flags, "4")), 0);
    assert_eq!(
        fs::read(from_cfg.join("dataset.ndjson")).unwrap(),
        fs::read(from_flags.join("dataset.ndjson")).unwrap()
    );

    let reseeded = dir.path().join("reseeded");
    let o = taxoprobe(&["build", "--config", path(&cfg), "--seed", "8", "--out", path(&reseeded)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_ne!(
        fs::read(from_cfg.join("dataset.ndjson")).unwrap(),
        fs::read(reseeded.join("dataset.ndjson")).unwrap()
    );
}

#[test]
fn taxomps_writes_five_questions_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let taxonomy = fixtures().join("taxonomy.txt");
    let o = taxoprobe(&["taxomps", "--taxonomy", path(&taxonomy), "--negative-seed", "3", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("taxomps_manifest.json")).unwrap()).unwrap();
    let pairs = m["n_pairs"].as_u64().unwrap();
    assert!(pairs > 0);
    assert_eq!(m["n_questions"].as_u64().unwrap(), 5 * pairs);
    let lines = fs::read_to_string(dir.path().join("taxomps.ndjson")).unwrap().lines().count() as u64;
    assert_eq!(lines, pairs);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    // missing input: configuration
    let o = taxoprobe(&["build", "--scenes", "/nonexistent/scenes", "--taxonomy", "/nonexistent/t.txt"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = taxoprobe(&["build", "--config", "/nonexistent/pipeline.toml"]);
    assert_eq!(code(&o), 2);
    let bad_cfg = dir.path().join("bad.toml");
    fs::write(&bad_cfg, "[seeds]\nunknown = 1\n").unwrap();
    assert_eq!(code(&taxoprobe(&["build", "--config", path(&bad_cfg)])), 2);
    assert_eq!(code(&taxoprobe(&["build", "--no-such-flag"])), 2);

    // malformed input: data
    let broken = dir.path().join("broken.txt");
    fs::write(&broken, "dog: canine\ncanine: dog\n").unwrap();
    let o = taxoprobe(&["taxomps", "--taxonomy", path(&broken), "--out", path(dir.path())]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let dataset = dir.path().join("d.ndjson");
    fs::write(&dataset, "{not json}\n").unwrap();
    let o = taxoprobe(&["eval", "--dataset", path(&dataset), "--endpoint", "http://127.0.0.1:9/v1", "--model", "m"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}
