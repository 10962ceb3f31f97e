//! Deterministic chat-completion server for tests and offline dry runs.
//! Answers depend only on the request content, never on arrival order.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use taxoprobe_core::seed::fnv1a64;
use taxoprobe_core::{Gold, QAInstance};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::prompt::{Slot, DESCRIPTION_SEPARATOR};
use crate::wire::{AssistantMessage, ChatRequest, ChatResponse, Choice, ChoiceLogprobs, TokenLogprob, TopLogprob};

pub const ROUTE: &str = "/v1/chat/completions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// Answers the gold label of any prompt found in the answer book.
    GoldOracle,
    AlwaysYes,
    /// Gold when the prompt carries a description, a hash coin flip otherwise.
    DescriptionDependent,
    /// The same top log-probabilities for every request.
    Fixed(Vec<TopLogprob>),
    /// Responds without any log-probabilities.
    NoLogprobs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockOptions {
    /// Per-request delay drawn from a hash of the prompt, in `0..=max_delay_ms`.
    pub max_delay_ms: u64,
    /// The first `fail_first` requests get HTTP 503.
    pub fail_first: usize,
    /// Requests after the first `fail_after` get HTTP 503.
    pub fail_after: Option<usize>,
    pub require_api_key: Option<String>,
}

/// Gold label per prompt text, for both the described and the bare form of
/// every question. A bare question with conflicting golds across instances
/// maps to `None`.
#[derive(Debug, Clone, Default)]
pub struct AnswerBook {
    by_prompt: HashMap<String, Option<Gold>>,
}

impl AnswerBook {
    pub fn from_dataset(dataset: &[QAInstance]) -> Self {
        let mut by_prompt: HashMap<String, Option<Gold>> = HashMap::new();
        for inst in dataset {
            for slot in Slot::all() {
                let Some(q) = slot.question(inst) else { continue };
                let described = format!("{}{DESCRIPTION_SEPARATOR}{}", inst.description, q.text);
                for key in [described, q.text.clone()] {
                    by_prompt
                        .entry(key)
                        .and_modify(|g| {
                            if *g != Some(q.gold) {
                                *g = None;
                            }
                        })
                        .or_insert(Some(q.gold));
                }
            }
        }
        Self { by_prompt }
    }

    pub fn lookup(&self, prompt: &str) -> Option<Gold> {
        self.by_prompt.get(prompt).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_prompt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_prompt.is_empty()
    }
}

pub fn coin(prompt: &str) -> Gold {
    if fnv1a64(prompt.as_bytes()) & 1 == 1 {
        Gold::Yes
    } else {
        Gold::No
    }
}

/// Top tokens the mock reports for a chosen answer; several casing and
/// spacing variants plus a distractor.
pub fn answer_logprobs(answer: Gold) -> Vec<TopLogprob> {
    let (win, lose) = match answer {
        Gold::Yes => (["Yes", " Yes", "yes"], ["No", " no"]),
        Gold::No => (["No", " No", "no"], ["Yes", " yes"]),
    };
    let table = [
        (win[0], 0.62),
        (win[1], 0.2),
        (lose[0], 0.1),
        ("Maybe", 0.05),
        (win[2], 0.02),
        (lose[1], 0.01),
    ];
    table
        .iter()
        .map(|(t, p)| TopLogprob {
            token: t.to_string(),
            logprob: f64::ln(*p),
        })
        .collect()
}

pub struct MockState {
    behavior: Behavior,
    book: AnswerBook,
    options: MockOptions,
    seen: AtomicUsize,
    log: Mutex<Vec<ChatRequest>>,
}

impl MockState {
    pub fn new(behavior: Behavior, book: AnswerBook, options: MockOptions) -> Arc<Self> {
        Arc::new(Self {
            behavior,
            book,
            options,
            seen: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        })
    }

    fn answer(&self, text: &str) -> Gold {
        match self.behavior {
            Behavior::AlwaysYes => Gold::Yes,
            Behavior::DescriptionDependent if !text.contains(DESCRIPTION_SEPARATOR) => coin(text),
            _ => self.book.lookup(text).unwrap_or_else(|| coin(text)),
        }
    }
}

fn response(model: &str, top: Option<Vec<TopLogprob>>) -> ChatResponse {
    let first = top.as_ref().and_then(|t| t.first()).cloned();
    ChatResponse {
        id: "mock-0".into(),
        model: model.to_string(),
        choices: vec![Choice {
            index: 0,
            message: Some(AssistantMessage {
                role: "assistant".into(),
                content: first.as_ref().map(|t| t.token.clone()),
            }),
            logprobs: top.map(|top_logprobs| ChoiceLogprobs {
                content: Some(vec![TokenLogprob {
                    token: first.as_ref().map_or_else(String::new, |t| t.token.clone()),
                    logprob: first.as_ref().map_or(0.0, |t| t.logprob),
                    top_logprobs,
                }]),
            }),
            finish_reason: Some("length".into()),
        }],
    }
}

async fn completions(State(state): State<Arc<MockState>>, headers: HeaderMap, Json(req): Json<ChatRequest>) -> Response {
    if let Some(key) = &state.options.require_api_key {
        let expected = format!("Bearer {key}");
        if headers.get("authorization").and_then(|v| v.to_str().ok()) != Some(expected.as_str()) {
            return (StatusCode::UNAUTHORIZED, "missing or wrong api key").into_response();
        }
    }
    let n = state.seen.fetch_add(1, Ordering::SeqCst);
    if n < state.options.fail_first || state.options.fail_after.is_some_and(|k| n >= k) {
        return (StatusCode::SERVICE_UNAVAILABLE, "warming up").into_response();
    }
    if req.max_tokens != 1 || !req.logprobs || req.top_logprobs == 0 {
        return (
            StatusCode::BAD_REQUEST,
            "expected max_tokens 1, logprobs true and top_logprobs > 0",
        )
            .into_response();
    }
    let Some(text) = req.user_content().map(|c| c.text()) else {
        return (StatusCode::BAD_REQUEST, "no user message").into_response();
    };
    state.log.lock().expect("request log").push(req.clone());

    if state.options.max_delay_ms > 0 {
        let ms = fnv1a64(text.as_bytes()) % (state.options.max_delay_ms + 1);
        tokio::time::sleep(Duration::from_millis(ms)).await;
    }
    let top = match &state.behavior {
        Behavior::NoLogprobs => None,
        Behavior::Fixed(top) => Some(top.clone()),
        _ => Some(answer_logprobs(state.answer(&text))),
    };
    let top = top.map(|mut t| {
        t.truncate(req.top_logprobs as usize);
        t
    });
    Json(response(&req.model, top)).into_response()
}

pub fn router(state: Arc<MockState>) -> Router {
    Router::new().route(ROUTE, post(completions)).with_state(state)
}

pub async fn serve(listener: TcpListener, state: Arc<MockState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// A mock running on a background task; stopped on drop.
pub struct MockServer {
    pub addr: SocketAddr,
    state: Arc<MockState>,
    handle: JoinHandle<()>,
}

impl MockServer {
    pub async fn spawn(behavior: Behavior, book: AnswerBook, options: MockOptions) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let state = MockState::new(behavior, book, options);
        let task_state = state.clone();
        let handle = tokio::spawn(async move {
            if let Err(e) = serve(listener, task_state).await {
                tracing::error!("mock server stopped: {e}");
            }
        });
        Ok(Self { addr, state, handle })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    /// Requests received so far, including rejected ones.
    pub fn request_count(&self) -> usize {
        self.state.seen.load(Ordering::SeqCst)
    }

    /// Accepted request bodies, in arrival order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.state.log.lock().expect("request log").clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.handle.abort();
    }
}
