use std::path::{Path, PathBuf};

use clap::Args;
use taxoprobe_core::dump::{list_dumps, read_dump, MANIFEST_SUFFIX, PAYLOAD_SUFFIX};

use crate::error::{config_error, data_error, Classify, CliResult};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Dump directories, manifest or payload files, or `<dir>/<name>` prefixes.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

fn manifests(p: &Path) -> CliResult<Vec<PathBuf>> {
    if p.is_dir() {
        let found = list_dumps(p).data()?;
        if found.is_empty() {
            return Err(config_error(format!("no dumps in {}", p.display())));
        }
        return Ok(found);
    }
    let s = p.to_string_lossy();
    let manifest = if s.ends_with(MANIFEST_SUFFIX) {
        p.to_path_buf()
    } else if let Some(prefix) = s.strip_suffix(PAYLOAD_SUFFIX) {
        PathBuf::from(format!("{prefix}{MANIFEST_SUFFIX}"))
    } else {
        PathBuf::from(format!("{s}{MANIFEST_SUFFIX}"))
    };
    if !manifest.exists() {
        return Err(config_error(format!("{} does not exist", manifest.display())));
    }
    Ok(vec![manifest])
}

pub fn run(args: &ValidateArgs) -> CliResult<()> {
    let mut all = Vec::new();
    for p in &args.paths {
        all.extend(manifests(p)?);
    }
    let mut failed = 0;
    for m in &all {
        match read_dump(m) {
            Ok(d) => println!(
                "ok   {}  {:?} {} x {}  sha256 {}",
                m.display(),
                d.manifest.role,
                d.manifest.rows,
                d.manifest.cols,
                d.manifest.payload_sha256
            ),
            Err(e) => {
                failed += 1;
                println!("FAIL {e}");
            }
        }
    }
    if failed > 0 {
        return Err(data_error(format!("{failed} of {} dumps failed validation", all.len())));
    }
    Ok(())
}
