//! Embedding dump files: a JSON manifest `<name>.manifest.json` next to a
//! raw payload `<name>.f32` of little-endian 32-bit floats in row-major order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use taxoprobe_stats::Matrix;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE: &str = "f32le";
pub const MANIFEST_SUFFIX: &str = ".manifest.json";
pub const PAYLOAD_SUFFIX: &str = ".f32";

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed manifest: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: invalid dump: {}", problems.join("; "))]
    Invalid { path: PathBuf, problems: Vec<String> },
}

type Result<T, E = DumpError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DumpRole {
    Static,
    LayerwiseContextual,
    QuestionFinal,
    VisionPatch,
    Unembedding,
}

/// Per-row metadata. Which fields are required depends on the role.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
    /// "positive" or "neg1".."neg4".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    /// "description" or "question".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mention_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_end: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpManifest {
    pub format_version: u32,
    pub model_id: String,
    pub role: DumpRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_layers: Option<usize>,
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_meta: Vec<RowMeta>,
    pub payload_sha256: String,
    /// Free-form producer settings (precision, chat template, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub settings: BTreeMap<String, String>,
}

impl DumpManifest {
    pub fn new(model_id: impl Into<String>, role: DumpRole, labels: Vec<String>, cols: usize) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            model_id: model_id.into(),
            role,
            layer: None,
            n_layers: None,
            rows: labels.len(),
            cols,
            dtype: DTYPE.into(),
            labels,
            row_meta: Vec::new(),
            payload_sha256: String::new(),
            settings: BTreeMap::new(),
        }
    }

    /// Schema checks that do not need the payload.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.format_version != FORMAT_VERSION {
            p.push(format!("unsupported format_version {}", self.format_version));
        }
        if self.dtype != DTYPE {
            p.push(format!("dtype `{}`, expected `{DTYPE}`", self.dtype));
        }
        if self.model_id.is_empty() {
            p.push("empty model_id".into());
        }
        if self.labels.len() != self.rows {
            p.push(format!("{} labels for {} rows", self.labels.len(), self.rows));
        }
        if !self.row_meta.is_empty() && self.row_meta.len() != self.rows {
            p.push(format!("{} row_meta entries for {} rows", self.row_meta.len(), self.rows));
        }
        if self.payload_sha256.len() != 64 || !self.payload_sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
            p.push("payload_sha256 is not a hex SHA-256 digest".into());
        }
        let need_meta = |p: &mut Vec<String>, what: &str, ok: &dyn Fn(&RowMeta) -> bool| {
            if self.row_meta.len() != self.rows {
                p.push(format!("role {:?} requires row_meta for every row", self.role));
                return;
            }
            if let Some(i) = self.row_meta.iter().position(|m| !ok(m)) {
                p.push(format!("row {i}: role {:?} requires {what}", self.role));
            }
        };
        match self.role {
            DumpRole::LayerwiseContextual => {
                match (self.layer, self.n_layers) {
                    (Some(l), Some(n)) if l < n => {}
                    (Some(l), Some(n)) => p.push(format!("layer {l} out of range for {n} layers")),
                    _ => p.push("layerwise_contextual dumps need layer and n_layers".into()),
                }
                need_meta(&mut p, "instance_id, slot, part, concept, mention_index", &|m| {
                    m.instance_id.is_some()
                        && m.slot.is_some()
                        && m.part.is_some()
                        && m.concept.is_some()
                        && m.mention_index.is_some()
                });
            }
            DumpRole::QuestionFinal => {
                need_meta(&mut p, "instance_id and slot", &|m| m.instance_id.is_some() && m.slot.is_some());
            }
            DumpRole::VisionPatch => {
                need_meta(&mut p, "concept and image_id", &|m| m.concept.is_some() && m.image_id.is_some());
            }
            DumpRole::Static | DumpRole::Unembedding => {}
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDump {
    pub name: String,
    pub manifest: DumpManifest,
    /// Payload with manifest labels as row labels.
    pub matrix: Matrix,
}

impl EmbeddingDump {
    pub fn row_index(&self) -> BTreeMap<&str, usize> {
        self.manifest
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect()
    }
}

pub fn manifest_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}{MANIFEST_SUFFIX}"))
}

pub fn payload_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}{PAYLOAD_SUFFIX}"))
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> DumpError + '_ {
    move |source| DumpError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode_payload(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io(&tmp))?;
    f.write_all(bytes).map_err(io(&tmp))?;
    f.sync_all().map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

/// Writes `matrix` (narrowed to f32) and its manifest. The digest, row
/// count and column count in `manifest` are filled in here.
pub fn write_dump(dir: &Path, name: &str, mut manifest: DumpManifest, matrix: &Matrix) -> Result<DumpManifest> {
    let payload = encode_payload(matrix.values());
    manifest.rows = matrix.rows();
    manifest.cols = matrix.cols();
    manifest.payload_sha256 = sha256_hex(&payload);
    let mpath = manifest_path(dir, name);
    let problems = manifest.problems();
    if !problems.is_empty() {
        return Err(DumpError::Invalid { path: mpath, problems });
    }
    fs::create_dir_all(dir).map_err(io(dir))?;
    write_atomic(&payload_path(dir, name), &payload)?;
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(|source| DumpError::Manifest {
        path: mpath.clone(),
        source,
    })?;
    json.push(b'\n');
    write_atomic(&mpath, &json)?;
    Ok(manifest)
}

/// `name` from `<dir>/<name>.manifest.json`.
pub fn dump_name(manifest: &Path) -> Option<String> {
    manifest
        .file_name()?
        .to_str()?
        .strip_suffix(MANIFEST_SUFFIX)
        .map(str::to_string)
}

/// Reads and fully validates a dump given its manifest path.
pub fn read_dump(manifest: &Path) -> Result<EmbeddingDump> {
    let invalid = |problems: Vec<String>| DumpError::Invalid {
        path: manifest.to_path_buf(),
        problems,
    };
    let name = dump_name(manifest).ok_or_else(|| invalid(vec![format!("file name must end in {MANIFEST_SUFFIX}")]))?;
    let text = fs::read(manifest).map_err(io(manifest))?;
    let m: DumpManifest = serde_json::from_slice(&text).map_err(|source| DumpError::Manifest {
        path: manifest.to_path_buf(),
        source,
    })?;
    let mut problems = m.problems();
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let ppath = payload_path(dir, &name);
    let payload = fs::read(&ppath).map_err(io(&ppath))?;
    let expected = m.rows * m.cols * 4;
    if payload.len() != expected {
        problems.push(format!(
            "payload has {} bytes, rows x cols x 4 = {expected}",
            payload.len()
        ));
    }
    let digest = sha256_hex(&payload);
    if digest != m.payload_sha256 {
        problems.push(format!("payload digest {digest} does not match manifest"));
    }
    if !problems.is_empty() {
        return Err(invalid(problems));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    let matrix = Matrix::new(m.rows, m.cols, values)
        .and_then(|mx| mx.with_row_labels(m.labels.clone()))
        .map_err(|e| invalid(vec![e.to_string()]))?;
    Ok(EmbeddingDump {
        name,
        manifest: m,
        matrix,
    })
}

/// Manifest paths in `dir`, sorted.
pub fn list_dumps(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| dump_name(p).is_some())
        .collect();
    out.sort();
    Ok(out)
}
