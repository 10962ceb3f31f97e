mod common;

use std::collections::BTreeMap;
use std::path::Path;

use taxoprobe_core::dump::{manifest_path, read_dump, write_dump, DumpManifest, DumpRole, RowMeta};
use taxoprobe_core::repranalysis::{
    hierarchy_rsa_report, layerwise_odds_report, separability_report, static_delta_report, visual_similarity_report,
    HierarchyRsaOptions, SeparabilityOptions, StaticDeltaOptions, VisualOptions,
};
use taxoprobe_core::stats::Matrix;
use taxoprobe_core::synthetic::{self, DumpDraft};
use taxoprobe_core::EmbeddingDump;

/// Writes a draft to disk and reads it back through validation.
fn round_trip(dir: &Path, d: DumpDraft) -> EmbeddingDump {
    write_dump(dir, &d.name, d.manifest, &d.matrix).unwrap();
    read_dump(&manifest_path(dir, &d.name)).unwrap()
}

fn rsa_options() -> HierarchyRsaOptions {
    HierarchyRsaOptions {
        subsets: 30,
        subset_size: 40,
        seed: 5,
        ridge: true,
    }
}

#[test]
fn identical_models_have_unit_rsa() {
    let dir = tempfile::tempdir().unwrap();
    let t = common::fixture_taxonomy();
    let a = round_trip(dir.path(), synthetic::unembedding_dump("vlm", "vlm", &t, 24, 0.3, 1));
    let b = round_trip(dir.path(), synthetic::unembedding_dump("lm", "lm", &t, 24, 0.3, 1));
    let r = hierarchy_rsa_report(&a, &b, &t, rsa_options()).unwrap();
    assert!((r.vlm_vs_lm.mean - 1.0).abs() < 1e-12, "{}", r.vlm_vs_lm.mean);
    assert_eq!(r.concepts.len(), t.concepts().len());
    assert_eq!(r, hierarchy_rsa_report(&a, &b, &t, rsa_options()).unwrap());
}

#[test]
fn rsa_falls_as_noise_grows() {
    let dir = tempfile::tempdir().unwrap();
    let t = common::fixture_taxonomy();
    let clean = round_trip(dir.path(), synthetic::unembedding_dump("clean", "m", &t, 24, 0.0, 2));
    let means: Vec<f64> = [0.5, 1.5, 4.0]
        .iter()
        .enumerate()
        .map(|(i, &noise)| {
            let noisy = round_trip(dir.path(), synthetic::unembedding_dump(&format!("n{i}"), "m", &t, 24, noise, 2));
            hierarchy_rsa_report(&clean, &noisy, &t, rsa_options()).unwrap().vlm_vs_lm.mean
        })
        .collect();
    assert!(means.windows(2).all(|w| w[0] > w[1]), "{means:?}");
}

#[test]
fn hierarchical_embeddings_track_the_taxonomy() {
    let dir = tempfile::tempdir().unwrap();
    let t = common::fixture_taxonomy();
    let structured = round_trip(dir.path(), synthetic::unembedding_dump("s", "m", &t, 24, 0.2, 3));
    let scrambled = {
        let mut d = synthetic::unembedding_dump("r", "m", &t, 24, 0.2, 3);
        let mut rows: Vec<Vec<f64>> = d.matrix.iter_rows().map(<[f64]>::to_vec).collect();
        rows.rotate_left(7);
        d.matrix = Matrix::from_rows(&rows).unwrap().with_row_labels(d.manifest.labels.clone()).unwrap();
        round_trip(dir.path(), d)
    };
    let r = hierarchy_rsa_report(&structured, &scrambled, &t, rsa_options()).unwrap();
    assert!(r.vlm_vs_taxonomy.mean > r.lm_vs_taxonomy.mean + 0.1, "{r:?}");
}

#[test]
fn static_delta_favours_the_structured_model() {
    let dir = tempfile::tempdir().unwrap();
    let t = common::fixture_taxonomy();
    let a = round_trip(dir.path(), synthetic::static_dump("a", "a", &t, 32, true, 4));
    let b = round_trip(dir.path(), synthetic::static_dump("b", "b", &t, 32, false, 4));
    let r = static_delta_report(&a, &b, &t, StaticDeltaOptions { negatives_per_pair: 4, seed: 9 }).unwrap();
    assert_eq!(r.n_pairs + r.skipped.len(), t.hypernym_pairs().len());
    assert!(r.mean_delta_a > 0.2 && r.mean_delta_b.abs() < 0.1, "{} {}", r.mean_delta_a, r.mean_delta_b);
    let tt = r.t_test.unwrap();
    assert!(tt.p < 0.05 && tt.t > 0.0);
}

#[test]
fn odds_rise_with_delta_at_the_informative_layer() {
    let dir = tempfile::tempdir().unwrap();
    let fx = synthetic::odds_fixture(300, 3, 1, Some(8.0), 6);
    let dumps: Vec<EmbeddingDump> = fx.dumps.into_iter().map(|d| round_trip(dir.path(), d)).collect();
    let r = layerwise_odds_report(&dumps, &fx.results).unwrap();
    assert_eq!((r.n_selected, r.n_missing), (300, 0));
    let layer = &r.layers[1];
    assert!(layer.odds_ratio > 1.0 && layer.p < 0.05, "{layer:?}");
    assert!(layer.ci_low > 1.0);
    for f in r.features.iter().filter(|f| f.layer == 1) {
        let i: usize = f.instance_id[2..f.instance_id.len() - 2].parse().unwrap();
        assert!((f.delta - fx.deltas[i]).abs() < 1e-6);
    }
}

#[test]
fn perfect_separation_is_flagged() {
    let fx = synthetic::odds_fixture(120, 2, 0, None, 7);
    let dumps: Vec<EmbeddingDump> = fx
        .dumps
        .into_iter()
        .map(|d| EmbeddingDump { name: d.name, manifest: d.manifest, matrix: d.matrix })
        .collect();
    let r = layerwise_odds_report(&dumps, &fx.results).unwrap();
    assert!(r.layers[0].separation);
    assert!(r.layers[0].lr_p < 1e-6);
    assert!(r.layers[0].coefficient > 0.0);
}

#[test]
fn odds_interval_covers_one_under_shuffled_labels() {
    use rand::seq::SliceRandom;
    let fx = synthetic::odds_fixture(200, 1, 0, Some(8.0), 8);
    let dumps: Vec<EmbeddingDump> = fx
        .dumps
        .into_iter()
        .map(|d| EmbeddingDump { name: d.name, manifest: d.manifest, matrix: d.matrix })
        .collect();
    let mut covered = 0;
    for s in 0..20 {
        let mut results = fx.results.clone();
        let mut flags: Vec<bool> = results.iter().filter(|r| r.parent_instance_id.is_some()).map(|r| r.positive_correct).collect();
        flags.shuffle(&mut taxoprobe_core::seed::rng_for(s, "shuffle"));
        for (r, f) in results.iter_mut().filter(|r| r.parent_instance_id.is_some()).zip(flags) {
            r.positive_correct = f;
        }
        let l = &layerwise_odds_report(&dumps, &results).unwrap().layers[0];
        covered += usize::from(l.ci_low <= 1.0 && 1.0 <= l.ci_high);
    }
    assert!(covered >= 18, "{covered} of 20");
}

#[test]
fn partial_spans_are_rejected() {
    let mut fx = synthetic::odds_fixture(10, 1, 0, Some(1.0), 9);
    let d = &mut fx.dumps[0];
    // drop the first instance's hypernym rows
    for m in d.manifest.row_meta.iter_mut().filter(|m| m.instance_id.as_deref() == Some("s:0#1")) {
        if m.slot.as_deref() == Some("positive") && m.part.as_deref() == Some("question") {
            m.part = Some("other".into());
        }
    }
    let dumps = vec![EmbeddingDump { name: d.name.clone(), manifest: d.manifest.clone(), matrix: d.matrix.clone() }];
    assert!(layerwise_odds_report(&dumps, &fx.results).is_err());
}

#[test]
fn separability_of_gaussians() {
    let dir = tempfile::tempdir().unwrap();
    let opts = SeparabilityOptions::default();
    let far = round_trip(dir.path(), synthetic::question_final_dump("far", 100, 6, 12.0, 10));
    let same = round_trip(dir.path(), synthetic::question_final_dump("same", 200, 6, 0.0, 11));
    let r = separability_report(&far, opts).unwrap();
    assert_eq!(r.svm.svm_error, 0.0);
    assert_eq!((r.n_hypernym, r.n_negative), (100, 100));
    let r = separability_report(&same, opts).unwrap();
    assert!(r.svm.svm_error > 0.3, "{}", r.svm.svm_error);
}

fn vision_dump(images: &[(&str, &str, [f64; 4])]) -> EmbeddingDump {
    let labels: Vec<String> = images.iter().map(|(c, img, _)| format!("{c}@{img}")).collect();
    let rows: Vec<Vec<f64>> = images.iter().map(|(_, _, v)| v.to_vec()).collect();
    let mut manifest = DumpManifest::new("vit", DumpRole::VisionPatch, labels.clone(), 4);
    manifest.row_meta = images
        .iter()
        .map(|(c, img, _)| RowMeta {
            concept: Some(c.to_string()),
            image_id: Some(img.to_string()),
            ..RowMeta::default()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let matrix = Matrix::from_rows(&rows).unwrap().with_row_labels(labels).unwrap();
    round_trip(dir.path(), DumpDraft { name: "vit".into(), manifest, matrix })
}

#[test]
fn visual_cohesion_matches_hand_count() {
    let e = |i: usize| {
        let mut v = [0.0; 4];
        v[i] = 1.0;
        v
    };
    let d = vision_dump(&[
        ("dog", "i1", e(0)),
        ("cat", "i2", e(0)),
        ("horse", "i3", e(0)),
        ("car", "i4", e(1)),
        ("bus", "i5", e(2)),
        ("truck", "i6", e(3)),
        ("chair", "i7", e(2)),
        ("table", "i8", e(2)),
        ("bed", "i9", e(3)),
        ("couch", "i10", e(3)),
    ]);
    let membership: BTreeMap<String, Vec<String>> = [
        ("animal", vec!["dog", "cat", "horse"]),
        ("vehicle", vec!["car", "bus", "truck"]),
        ("furniture", vec!["chair", "table", "bed", "couch"]),
    ]
    .into_iter()
    .map(|(h, m)| (h.to_string(), m.into_iter().map(String::from).collect()))
    .collect();
    let mut cond = BTreeMap::new();
    for (h, members) in &membership {
        for (k, m) in members.iter().enumerate() {
            cond.insert((m.clone(), h.clone()), 0.5 + 0.1 * k as f64);
        }
    }
    let r = visual_similarity_report(&d, &membership, &cond, VisualOptions::default()).unwrap();
    let sim = |hypo: &str| r.records.iter().find(|x| x.hyponym == hypo).unwrap().viz_sim;
    // animals share one direction; car is orthogonal to the mean of bus and truck
    assert!((sim("dog") - 1.0).abs() < 1e-12);
    assert!(sim("car").abs() < 1e-12);
    // chair against mean(e2, e3, e3) = (1, 2) / 3 in that plane
    assert!((sim("chair") - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    assert!(sim("bus").abs() < 1e-12);
    // sorted: 0 0 0 x x x x 1 1 1 with x = 1/sqrt(5), so the median is x
    assert!((r.median_viz_sim - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    let cohesion: BTreeMap<&str, f64> = r.cohesion.iter().map(|c| (c.hypernym.as_str(), c.cohesion)).collect();
    assert_eq!(cohesion["animal"], 1.0);
    assert_eq!(cohesion["vehicle"], 0.0);
    assert_eq!(cohesion["furniture"], 0.0);
}

#[test]
fn prototype_leaves_out_the_leaf_and_its_images() {
    let d = vision_dump(&[("dog", "i1", [1.0, 0.0, 0.0, 0.0]), ("cat", "i1", [0.0, 1.0, 0.0, 0.0]), ("cat", "i2", [0.0, 0.0, 1.0, 0.0])]);
    let membership: BTreeMap<String, Vec<String>> =
        [("animal".to_string(), vec!["dog".to_string(), "cat".to_string()])].into();
    let cond: BTreeMap<(String, String), f64> = [(("dog".to_string(), "animal".to_string()), 1.0)].into();
    let r = visual_similarity_report(&d, &membership, &cond, VisualOptions::default()).unwrap();
    assert_eq!(r.records[0].prototype_rows, vec![2]);
    let r = visual_similarity_report(&d, &membership, &cond, VisualOptions { exclude_leaf: false }).unwrap();
    assert_eq!(r.records[0].prototype_rows, vec![0, 1, 2]);
}
