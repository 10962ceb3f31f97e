use std::path::Path;
use std::time::Duration;

use reqwest::StatusCode;

use crate::prompt::{image_data_url, resolve_image, Prompt};
use crate::score::aggregate_yes_no;
use crate::wire::{ChatRequest, ChatResponse, TopLogprob};
use crate::{EndpointConfig, EvalError, Result, YesNoScore};

const MAX_BACKOFF: Duration = Duration::from_secs(10);

/// A validated endpoint with a reusable HTTP client.
#[derive(Debug, Clone)]
pub struct Endpoint {
    cfg: EndpointConfig,
    http: reqwest::Client,
    url: String,
    api_key: Option<String>,
}

enum Attempt {
    Retry(String),
    Fatal(EvalError),
}

impl Endpoint {
    pub fn new(cfg: EndpointConfig) -> Result<Self> {
        cfg.validate()?;
        let http = reqwest::Client::builder()
            .timeout(cfg.timeout())
            .build()
            .map_err(|e| EvalError::Config(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            url: cfg.completions_url(),
            api_key: cfg.resolved_api_key(),
            http,
            cfg,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    pub fn request_for(&self, prompt: &Prompt, image_root: Option<&Path>) -> Result<ChatRequest> {
        let image_url = match &prompt.image {
            Some(img) => Some(image_data_url(&resolve_image(img, image_root))?),
            None => None,
        };
        Ok(ChatRequest::new(
            &self.cfg.model_name,
            self.cfg.system_prompt.as_deref(),
            prompt,
            image_url,
            self.cfg.logprob_top_k,
        ))
    }

    async fn attempt(&self, body: &ChatRequest) -> std::result::Result<ChatResponse, Attempt> {
        let mut req = self.http.post(&self.url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        let text = resp.text().await.map_err(|e| Attempt::Retry(e.to_string()))?;
        if !status.is_success() {
            return Err(Attempt::Fatal(EvalError::Http {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            }));
        }
        serde_json::from_str(&text).map_err(|e| Attempt::Fatal(EvalError::Protocol(e.to_string())))
    }

    /// Sends one request, retrying transport failures, 429 and 5xx with
    /// exponential backoff.
    pub async fn complete(&self, body: &ChatRequest) -> Result<ChatResponse> {
        let attempts = self.cfg.retries + 1;
        let mut backoff = Duration::from_millis(self.cfg.retry_backoff_ms);
        for i in 1..=attempts {
            match self.attempt(body).await {
                Ok(r) => return Ok(r),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) if i == attempts => {
                    return Err(EvalError::Transport { attempts, message });
                }
                Err(Attempt::Retry(message)) => {
                    tracing::debug!(attempt = i, %message, "retrying request");
                    tokio::time::sleep(backoff).await;
                    backoff = (backoff * 2).min(MAX_BACKOFF);
                }
            }
        }
        unreachable!("loop returns on the last attempt")
    }

    pub async fn top_logprobs(&self, prompt: &Prompt, image_root: Option<&Path>) -> Result<Vec<TopLogprob>> {
        let body = self.request_for(prompt, image_root)?;
        let resp = self.complete(&body).await?;
        resp.first_token_top().map(<[_]>::to_vec).ok_or(EvalError::NoLogprobs)
    }

    /// Constrained Yes/No score of one prompt. An answer with no Yes or No
    /// variant among the top tokens is an `Abstention` error.
    pub async fn score_yes_no(&self, prompt: &Prompt, image_root: Option<&Path>) -> Result<YesNoScore> {
        aggregate_yes_no(&self.top_logprobs(prompt, image_root).await?)
    }
}
