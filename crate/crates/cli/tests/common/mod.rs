#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn taxoprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taxoprobe"))
        .args(args)
        .env_remove("TAXOPROBE_API_KEY")
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Builds the fixture dataset into `out` with seed 7.
pub fn build_fixture(out: &Path, threads: &str) -> Output {
    let scenes = fixtures().join("scenes");
    let taxonomy = fixtures().join("taxonomy.txt");
    taxoprobe(&[
        "build",
        "--threads",
        threads,
        "--scenes",
        path(&scenes),
        "--taxonomy",
        path(&taxonomy),
        "--seed",
        "7",
        "--out",
        path(out),
    ])
}

/// A `taxoprobe mock-serve` child process, killed on drop.
pub struct MockProcess {
    child: Child,
    pub base_url: String,
}

impl MockProcess {
    pub fn start(dataset: &Path, behavior: &str) -> Self {
        let mut child = Command::new(env!("CARGO_BIN_EXE_taxoprobe"))
            .args(["mock-serve", "--dataset", path(dataset), "--behavior", behavior, "--max-delay-ms", "3"])
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("mock starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().expect("piped stdout"))
            .read_line(&mut line)
            .expect("mock announces its address");
        let base_url = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected mock output `{line}`"))
            .to_string();
        Self { child, base_url }
    }
}

impl Drop for MockProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
