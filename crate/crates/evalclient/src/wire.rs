//! Chat-completion request and response bodies (the OpenAI-compatible
//! subset this crate sends and reads).

use serde::{Deserialize, Serialize};

use crate::prompt::Prompt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub max_tokens: u32,
    pub logprobs: bool,
    pub top_logprobs: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: Content,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Content {
    Text(String),
    Parts(Vec<Part>),
}

impl Content {
    /// Concatenated text of all text parts.
    pub fn text(&self) -> String {
        match self {
            Content::Text(t) => t.clone(),
            Content::Parts(parts) => parts
                .iter()
                .filter_map(|p| match p {
                    Part::Text { text } => Some(text.as_str()),
                    Part::ImageUrl { .. } => None,
                })
                .collect::<Vec<_>>()
                .join(""),
        }
    }

    pub fn has_image(&self) -> bool {
        matches!(self, Content::Parts(parts) if parts.iter().any(|p| matches!(p, Part::ImageUrl { .. })))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Part {
    Text { text: String },
    ImageUrl { image_url: ImageUrl },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageUrl {
    pub url: String,
}

impl ChatRequest {
    /// `image_url` is the already-encoded data URL for vqa prompts.
    pub fn new(model: &str, system: Option<&str>, prompt: &Prompt, image_url: Option<String>, top_k: u32) -> Self {
        let mut messages = Vec::new();
        if let Some(s) = system {
            messages.push(Message {
                role: "system".into(),
                content: Content::Text(s.to_string()),
            });
        }
        let content = match image_url {
            Some(url) => Content::Parts(vec![
                Part::Text {
                    text: prompt.text.clone(),
                },
                Part::ImageUrl {
                    image_url: ImageUrl { url },
                },
            ]),
            None => Content::Text(prompt.text.clone()),
        };
        messages.push(Message {
            role: "user".into(),
            content,
        });
        Self {
            model: model.to_string(),
            messages,
            max_tokens: 1,
            logprobs: true,
            top_logprobs: top_k,
        }
    }

    pub fn user_content(&self) -> Option<&Content> {
        self.messages.iter().rev().find(|m| m.role == "user").map(|m| &m.content)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub model: String,
    pub choices: Vec<Choice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    #[serde(default)]
    pub index: u32,
    #[serde(default)]
    pub message: Option<AssistantMessage>,
    #[serde(default)]
    pub logprobs: Option<ChoiceLogprobs>,
    #[serde(default)]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistantMessage {
    pub role: String,
    #[serde(default)]
    pub content: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceLogprobs {
    #[serde(default)]
    pub content: Option<Vec<TokenLogprob>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
    #[serde(default)]
    pub top_logprobs: Vec<TopLogprob>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopLogprob {
    pub token: String,
    pub logprob: f64,
}

impl ChatResponse {
    /// Top alternatives for the first generated token, if the endpoint sent any.
    pub fn first_token_top(&self) -> Option<&[TopLogprob]> {
        let first = self.choices.first()?.logprobs.as_ref()?.content.as_ref()?.first()?;
        (!first.top_logprobs.is_empty()).then_some(first.top_logprobs.as_slice())
    }
}
