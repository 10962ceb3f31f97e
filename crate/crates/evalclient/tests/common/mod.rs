#![allow(dead_code)]

use std::path::PathBuf;

use taxoprobe_core::pipeline::{build_dataset, BuildConfig};
use taxoprobe_core::scene::load_scene_graphs;
use taxoprobe_core::{MetricsReport, QAInstance, Taxonomy};
use taxoprobe_eval::mock::{AnswerBook, Behavior, MockOptions, MockServer};
use taxoprobe_eval::{Endpoint, EndpointConfig, EvalRun};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_dataset() -> Vec<QAInstance> {
    let t: Taxonomy = std::fs::read_to_string(fixtures().join("taxonomy.txt"))
        .unwrap()
        .parse()
        .unwrap();
    let scenes = load_scene_graphs(&fixtures().join("scenes")).unwrap();
    let cfg = BuildConfig {
        dataset_seed: 7,
        negative_seed: 11,
        ..BuildConfig::default()
    };
    build_dataset(&scenes, &t, &cfg).unwrap().instances
}

pub fn config(url: &str, max_in_flight: usize) -> EndpointConfig {
    EndpointConfig {
        max_in_flight,
        retry_backoff_ms: 5,
        timeout_secs: 10.0,
        api_key_env: "TAXOPROBE_TEST_UNSET_KEY".into(),
        ..EndpointConfig::new(url, "mock-vlm")
    }
}

pub fn endpoint(url: &str, max_in_flight: usize) -> Endpoint {
    Endpoint::new(config(url, max_in_flight)).unwrap()
}

pub async fn mock(behavior: Behavior, dataset: &[QAInstance], options: MockOptions) -> MockServer {
    MockServer::spawn(behavior, AnswerBook::from_dataset(dataset), options)
        .await
        .unwrap()
}

pub fn metrics(run: &EvalRun) -> MetricsReport {
    taxoprobe_core::metrics::metrics_report(&run.instance_set().unwrap()).unwrap()
}

pub fn bytes(run: &EvalRun) -> String {
    serde_json::to_string(run).unwrap()
}
