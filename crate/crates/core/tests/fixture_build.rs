mod common;

use std::collections::BTreeSet;

use taxoprobe_core::dataset::{from_ndjson, to_ndjson};
use taxoprobe_core::pipeline::{build_dataset, BuildConfig, BuildOutput};
use taxoprobe_core::scene::{load_scene_graphs, FilterReason, SceneGraph};
use taxoprobe_core::Taxonomy;

fn inputs() -> (Vec<SceneGraph>, Taxonomy) {
    let scenes = load_scene_graphs(&common::fixtures().join("scenes")).unwrap();
    (scenes, common::fixture_taxonomy())
}

fn cfg() -> BuildConfig {
    BuildConfig {
        dataset_seed: 7,
        negative_seed: 11,
        ..BuildConfig::default()
    }
}

fn build_with_threads(threads: usize) -> BuildOutput {
    let (scenes, t) = inputs();
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| build_dataset(&scenes, &t, &cfg()).unwrap())
}

#[test]
fn fixture_has_ten_scenes() {
    let (scenes, _) = inputs();
    assert_eq!(scenes.len(), 10);
}

#[test]
fn build_is_byte_identical_across_runs_and_threads() {
    let reference = build_with_threads(1);
    let bytes = to_ndjson(&reference.instances);
    let manifest = serde_json::to_string(&reference.manifest).unwrap();
    for threads in [1, 2, 8] {
        let again = build_with_threads(threads);
        assert_eq!(to_ndjson(&again.instances), bytes, "{threads} threads");
        assert_eq!(serde_json::to_string(&again.manifest).unwrap(), manifest);
    }
}

#[test]
fn input_order_does_not_matter() {
    let (mut scenes, t) = inputs();
    let a = build_dataset(&scenes, &t, &cfg()).unwrap();
    scenes.reverse();
    let b = build_dataset(&scenes, &t, &cfg()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn manifest_counts_are_consistent() {
    let out = build_with_threads(4);
    let m = &out.manifest;
    assert_eq!(m.n_scenes, 10);
    assert_eq!(m.n_scenes_accepted, 8);
    assert_eq!(m.scene_rejections.get(&FilterReason::TooManyObjects), Some(&1));
    assert_eq!(m.scene_rejections.get(&FilterReason::DuplicateLabels), Some(&1));
    assert_eq!(m.n_total, 5 * m.n_positive);
    assert_eq!(m.n_negative, 4 * m.n_positive);
    assert_eq!(m.n_positive, m.n_leaf + m.n_substituted);
    assert_eq!(m.n_positive, out.instances.len());
    assert_eq!(m.by_depth.values().sum::<usize>(), m.n_positive);
    assert_eq!(m.by_qtype.values().sum::<usize>(), m.n_positive);
    assert_eq!(m.by_depth[&0], m.n_leaf);

    let scene_ids: BTreeSet<&str> = out.instances.iter().map(|i| i.scene_id.as_str()).collect();
    assert!(!scene_ids.contains("2370009") && !scene_ids.contains("2370010"));
    // the bus and the car share hypernyms, so neither can be asked about
    assert!(!out.instances.iter().any(|i| i.source_leaf == "bus" || i.source_leaf == "car"));
    assert!(out.instances.iter().any(|i| i.source_leaf == "tennis_racket"));
}

#[test]
fn seeds_change_the_sample() {
    let (scenes, t) = inputs();
    let a = build_dataset(&scenes, &t, &cfg()).unwrap();
    let other = BuildConfig { negative_seed: 12, ..cfg() };
    let b = build_dataset(&scenes, &t, &other).unwrap();
    assert_eq!(a.instances.len(), b.instances.len());
    assert_ne!(a.instances, b.instances);
}

#[test]
fn dataset_round_trips_through_ndjson() {
    let out = build_with_threads(2);
    let text = to_ndjson(&out.instances);
    assert_eq!(from_ndjson(&text).unwrap(), out.instances);
}

#[test]
fn descriptions_use_spaced_names() {
    let out = build_with_threads(2);
    let inst = out.instances.iter().find(|i| i.scene_id == "2370007").unwrap();
    assert_eq!(
        inst.description,
        "There is a standing man wearing a blue cotton shirt. There are blue denim jeans. \
         There is a black hat. There is a red tennis racket. The man is wearing the jeans. \
         The man is holding the tennis racket. The hat is on the man."
    );
}
