use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use taxoprobe_core::questgen::{QAInstance, Question, NEGATIVES_PER_QUESTION};

use crate::{EvalError, Mode, Result};

pub const DESCRIPTION_SEPARATOR: &str = "\n\n";

/// Which question of an instance is asked. Orders as positive, neg1..neg4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Slot {
    Positive,
    /// 1-based negative index.
    Negative(u8),
}

impl Slot {
    pub fn all() -> impl Iterator<Item = Slot> {
        std::iter::once(Slot::Positive).chain((1..=NEGATIVES_PER_QUESTION as u8).map(Slot::Negative))
    }

    pub fn question(self, inst: &QAInstance) -> Option<&Question> {
        match self {
            Slot::Positive => Some(&inst.positive),
            Slot::Negative(k) => inst.negatives.get(usize::from(k).checked_sub(1)?),
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Positive => f.write_str("positive"),
            Slot::Negative(k) => write!(f, "neg{k}"),
        }
    }
}

impl FromStr for Slot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "positive" {
            return Ok(Slot::Positive);
        }
        s.strip_prefix("neg")
            .and_then(|k| k.parse::<u8>().ok())
            .filter(|&k| (1..=NEGATIVES_PER_QUESTION as u8).contains(&k))
            .map(Slot::Negative)
            .ok_or_else(|| format!("unknown slot `{s}`"))
    }
}

impl TryFrom<String> for Slot {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Slot> for String {
    fn from(s: Slot) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    /// Image reference as stored on the instance (vqa only).
    pub image: Option<String>,
}

pub fn build_prompt(inst: &QAInstance, slot: Slot, mode: Mode) -> Result<Prompt> {
    let q = slot.question(inst).ok_or_else(|| {
        EvalError::Dataset(format!(
            "instance `{}` has no {slot} question ({} negatives)",
            inst.instance_id,
            inst.negatives.len()
        ))
    })?;
    match mode {
        Mode::Text => Ok(Prompt {
            text: format!("{}{DESCRIPTION_SEPARATOR}{}", inst.description, q.text),
            image: None,
        }),
        Mode::QuestionOnly => Ok(Prompt {
            text: q.text.clone(),
            image: None,
        }),
        Mode::Vqa => {
            let image = inst.image.clone().filter(|i| !i.is_empty()).ok_or_else(|| EvalError::MissingImage {
                instance_id: inst.instance_id.clone(),
            })?;
            Ok(Prompt {
                text: q.text.clone(),
                image: Some(image),
            })
        }
    }
}

fn mime_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        _ => "image/jpeg",
    }
}

pub fn resolve_image(image: &str, root: Option<&Path>) -> PathBuf {
    match root {
        Some(r) => r.join(image),
        None => PathBuf::from(image),
    }
}

/// Reads an image file into a `data:` URL.
pub fn image_data_url(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| EvalError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(format!(
        "data:{};base64,{}",
        mime_type(path),
        base64::engine::general_purpose::STANDARD.encode(bytes)
    ))
}
