use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::{EvalError, Result};

pub const DEFAULT_API_KEY_ENV: &str = "TAXOPROBE_API_KEY";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Text,
    QuestionOnly,
    Vqa,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Text => "text",
            Mode::QuestionOnly => "question_only",
            Mode::Vqa => "vqa",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Mode::Text),
            "question_only" => Ok(Mode::QuestionOnly),
            "vqa" => Ok(Mode::Vqa),
            other => Err(EvalError::Config(format!(
                "unknown mode `{other}` (expected text, question_only or vqa)"
            ))),
        }
    }
}

/// How the final Yes/No answer is read off the constrained distribution.
/// Written as `argmax` or `sample(SEED)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Decision {
    #[default]
    Argmax,
    Sample(u64),
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Argmax => f.write_str("argmax"),
            Decision::Sample(seed) => write!(f, "sample({seed})"),
        }
    }
}

impl FromStr for Decision {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "argmax" {
            return Ok(Decision::Argmax);
        }
        s.strip_prefix("sample(")
            .and_then(|rest| rest.strip_suffix(')'))
            .and_then(|seed| seed.trim().parse().ok())
            .map(Decision::Sample)
            .ok_or_else(|| EvalError::Config(format!("unknown decision `{s}` (expected argmax or sample(SEED))")))
    }
}

impl TryFrom<String> for Decision {
    type Error = EvalError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Decision> for String {
    fn from(d: Decision) -> String {
        d.to_string()
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `http://localhost:8000/v1`.
    /// A URL already ending in `/chat/completions` is used as is.
    pub base_url: String,
    pub model_name: String,
    /// Never serialized; filled from `api_key_env` when absent.
    #[serde(skip)]
    pub api_key: Option<String>,
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub timeout_secs: f64,
    /// Extra attempts after a transport failure, HTTP 429 or HTTP 5xx.
    pub retries: usize,
    pub retry_backoff_ms: u64,
    pub logprob_top_k: u32,
    /// Sent as a leading system message when set. Off by default.
    pub system_prompt: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model_name: String::new(),
            api_key: None,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            max_in_flight: 8,
            timeout_secs: 60.0,
            retries: 3,
            retry_backoff_ms: 250,
            logprob_top_k: 20,
            system_prompt: None,
        }
    }
}

impl fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("base_url", &self.base_url)
            .field("model_name", &self.model_name)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("api_key_env", &self.api_key_env)
            .field("max_in_flight", &self.max_in_flight)
            .field("timeout_secs", &self.timeout_secs)
            .field("retries", &self.retries)
            .field("retry_backoff_ms", &self.retry_backoff_ms)
            .field("logprob_top_k", &self.logprob_top_k)
            .field("system_prompt", &self.system_prompt)
            .finish()
    }
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.base_url.trim().is_empty() {
            problems.push("base_url is empty".to_string());
        } else if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            problems.push(format!("base_url `{}` is not an http(s) URL", self.base_url));
        }
        if self.model_name.trim().is_empty() {
            problems.push("model_name is empty".into());
        }
        if self.max_in_flight < 1 {
            problems.push("max_in_flight must be at least 1".into());
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            problems.push(format!("timeout_secs must be positive, got {}", self.timeout_secs));
        }
        if self.logprob_top_k < 10 {
            problems.push(format!("logprob_top_k must be at least 10, got {}", self.logprob_top_k));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(EvalError::Config(problems.join("; ")))
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    /// The explicit key, else the value of `api_key_env` if set and non-empty.
    pub fn resolved_api_key(&self) -> Option<String> {
        self.api_key
            .clone()
            .or_else(|| std::env::var(&self.api_key_env).ok())
            .filter(|k| !k.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_round_trips_through_text() {
        for d in [Decision::Argmax, Decision::Sample(0), Decision::Sample(991)] {
            assert_eq!(d.to_string().parse::<Decision>().unwrap(), d);
            let json = serde_json::to_string(&d).unwrap();
            assert_eq!(serde_json::from_str::<Decision>(&json).unwrap(), d);
        }
        assert!("sample(x)".parse::<Decision>().is_err());
        assert!("greedy".parse::<Decision>().is_err());
    }

    #[test]
    fn validation_collects_every_problem() {
        let cfg = EndpointConfig {
            max_in_flight: 0,
            timeout_secs: 0.0,
            logprob_top_k: 5,
            ..EndpointConfig::new("ftp://x", "m")
        };
        let EvalError::Config(msg) = cfg.validate().unwrap_err() else {
            panic!("expected a config error")
        };
        for needle in ["http(s)", "max_in_flight", "timeout_secs", "logprob_top_k"] {
            assert!(msg.contains(needle), "{msg}");
        }
        assert!(EndpointConfig::new("http://h/v1", "m").validate().is_ok());
    }

    #[test]
    fn completions_url_is_appended_once() {
        assert_eq!(
            EndpointConfig::new("http://h/v1/", "m").completions_url(),
            "http://h/v1/chat/completions"
        );
        assert_eq!(
            EndpointConfig::new("http://h/v1/chat/completions", "m").completions_url(),
            "http://h/v1/chat/completions"
        );
    }

    #[test]
    fn debug_output_hides_the_key() {
        let cfg = EndpointConfig {
            api_key: Some("sk-secret".into()),
            ..EndpointConfig::new("http://h", "m")
        };
        assert!(!format!("{cfg:?}").contains("sk-secret"));
        assert!(!serde_json::to_string(&cfg).unwrap().contains("sk-secret"));
    }
}
