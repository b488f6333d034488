use serde::{Deserialize, Serialize};

/// Generation settings. Greedy decoding makes output a function of
/// (model, prompt); `top_p` is transmitted but inert under greedy decoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingConfig {
    pub greedy: bool,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        Self {
            greedy: true,
            temperature: 0.0,
            top_p: 0.95,
            max_new_tokens: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub do_sample: bool,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Vec<ChatMessage>, decoding: DecodingConfig) -> Self {
        Self {
            model: model.into(),
            messages,
            temperature: decoding.temperature,
            top_p: decoding.top_p,
            max_tokens: decoding.max_new_tokens,
            do_sample: !decoding.greedy,
        }
    }

    pub fn system_text(&self) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == "system")
            .map(|m| m.content.as_str())
    }

    pub fn user_text(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Deserialize)]
pub(crate) struct ChatResponse {
    pub choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct ChatChoice {
    pub message: ChatMessage,
}

#[derive(Debug, Serialize)]
pub(crate) struct EmbeddingRequest<'a> {
    pub model: &'a str,
    pub input: &'a [String],
}

#[derive(Debug, Deserialize)]
pub(crate) struct EmbeddingResponse {
    pub data: Vec<EmbeddingDatum>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct EmbeddingDatum {
    pub embedding: Vec<f32>,
}

#[derive(Debug, Serialize)]
pub(crate) struct ListScoreRequest<'a> {
    pub model: &'a str,
    pub query: &'a str,
    pub documents: Vec<&'a str>,
}

#[derive(Debug, Serialize)]
pub(crate) struct PairScoreRequest<'a> {
    pub model: &'a str,
    pub pairs: Vec<Pair<'a>>,
}

#[derive(Debug, Serialize)]
pub(crate) struct Pair<'a> {
    pub query: &'a str,
    pub document: &'a str,
}

#[derive(Debug, Deserialize)]
pub(crate) struct ScoresResponse {
    pub scores: Vec<f64>,
}
