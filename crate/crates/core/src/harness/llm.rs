//! Optional text-generation mutator. Disabled unless configured; the request
//! and reply bodies follow the common chat-completions JSON shape.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::candidate::Candidate;
use super::genome::parse_code;
use super::mutators::{MutationKind, Mutator};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_token_env")]
    pub token_env: String,
    /// Attempts per mutation before giving up.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Prompt with `{instruction}` and `{code}` placeholders.
    #[serde(default = "default_template")]
    pub prompt_template: String,
}

fn default_token_env() -> String {
    "BSPACE_LLM_TOKEN".into()
}

fn default_max_attempts() -> usize {
    3
}

fn default_timeout() -> u64 {
    120
}

pub const DEFAULT_TEMPLATE: &str = "You write black-box optimizers in the template language shown below. \
{instruction}\n\n```python\n{code}\n```\n\nReply with the complete algorithm in a single fenced code block.";

fn default_template() -> String {
    DEFAULT_TEMPLATE.into()
}

impl LlmConfig {
    pub fn new(endpoint: &str, model: &str) -> Self {
        LlmConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            token_env: default_token_env(),
            max_attempts: default_max_attempts(),
            timeout_secs: default_timeout(),
            prompt_template: default_template(),
        }
    }
}

fn instruction(kind: Option<MutationKind>) -> &'static str {
    match kind {
        Some(MutationKind::RefineSimplify) => "Improve the algorithm and make its code simpler.",
        Some(MutationKind::RandomNew) | None => {
            "Write a new algorithm that differs from the one shown."
        }
        Some(MutationKind::Adaptive) => "Change a small part of the algorithm to improve it.",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("network failure: {0}")]
    Network(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("unexpected reply: {0}")]
    Protocol(String),
}

/// Request/response channel to a text-generation endpoint. Returns the reply
/// text of the first choice.
pub trait Transport {
    fn send(&mut self, request: &ChatRequest) -> Result<String, TransportError>;
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
}

#[derive(Deserialize)]
struct ChatReplyMessage {
    content: String,
}

/// Text of the first choice of a chat-completions reply body.
pub fn parse_chat_reply(body: &str) -> Result<String, TransportError> {
    let reply: ChatReply =
        serde_json::from_str(body).map_err(|e| TransportError::Protocol(e.to_string()))?;
    reply
        .choices
        .into_iter()
        .next()
        .map(|c| c.message.content)
        .ok_or_else(|| TransportError::Protocol("no choices in reply".into()))
}

/// Body of the first fenced code block in `text`, without the info string.
pub fn extract_code_block(text: &str) -> Option<String> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(body[..end].trim_end().to_string() + "\n")
}

/// Mutator that asks a text-generation endpoint for each child.
pub struct LlmMutator<T: Transport> {
    cfg: LlmConfig,
    transport: T,
}

impl<T: Transport> LlmMutator<T> {
    pub fn new(cfg: LlmConfig, transport: T) -> Self {
        LlmMutator { cfg, transport }
    }

    fn request(
        &mut self,
        kind: Option<MutationKind>,
        code: &str,
    ) -> Result<Candidate, HarnessError> {
        let prompt = self
            .cfg
            .prompt_template
            .replace("{instruction}", instruction(kind))
            .replace("{code}", code.trim_end());
        let request = ChatRequest {
            model: self.cfg.model.clone(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: prompt,
            }],
        };
        let attempts = self.cfg.max_attempts.max(1);
        for attempt in 1..=attempts {
            let reason = match self.transport.send(&request) {
                Err(TransportError::Auth(msg)) => {
                    return Err(HarnessError::MutationUnavailable(format!(
                        "authentication failed: {msg}"
                    )))
                }
                Err(e) => e.to_string(),
                Ok(reply) => match extract_code_block(&reply) {
                    None => "reply has no fenced code block".to_string(),
                    Some(code) => match parse_code(&code) {
                        Ok((genome, blocks)) => {
                            let mut c = Candidate::new(genome, blocks);
                            c.code_text = code;
                            return Ok(c);
                        }
                        Err(e) => e.to_string(),
                    },
                },
            };
            log::warn!("generation attempt {attempt}/{attempts} rejected: {reason}");
        }
        Err(HarnessError::MutationUnavailable(format!(
            "no valid reply after {attempts} attempts"
        )))
    }
}

impl<T: Transport> Mutator for LlmMutator<T> {
    fn mutate(
        &mut self,
        parent: &Candidate,
        kind: MutationKind,
        _: &mut ChaCha8Rng,
    ) -> Result<Candidate, HarnessError> {
        self.request(Some(kind), &parent.code_text)
    }

    fn initial(&mut self, rng: &mut ChaCha8Rng) -> Result<Candidate, HarnessError> {
        let seed = super::mutators::mutate_random_new(rng);
        self.request(None, &seed.code_text)
    }
}

#[cfg(feature = "http")]
pub use http::HttpTransport;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use super::{parse_chat_reply, ChatRequest, LlmConfig, Transport, TransportError};

    /// Blocking HTTPS transport.
    pub struct HttpTransport {
        client: reqwest::blocking::Client,
        endpoint: String,
        token: String,
    }

    impl HttpTransport {
        /// Reads the token from the configured environment variable.
        pub fn from_config(cfg: &LlmConfig) -> Result<Self, TransportError> {
            let token = std::env::var(&cfg.token_env).map_err(|_| {
                TransportError::Auth(format!("environment variable {} is not set", cfg.token_env))
            })?;
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(cfg.timeout_secs))
                .build()
                .map_err(|e| TransportError::Network(e.to_string()))?;
            Ok(HttpTransport {
                client,
                endpoint: cfg.endpoint.clone(),
                token,
            })
        }
    }

    impl Transport for HttpTransport {
        fn send(&mut self, request: &ChatRequest) -> Result<String, TransportError> {
            let resp = self
                .client
                .post(&self.endpoint)
                .bearer_auth(&self.token)
                .json(request)
                .send()
                .map_err(|e| TransportError::Network(e.to_string()))?;
            let status = resp.status();
            if status == reqwest::StatusCode::UNAUTHORIZED
                || status == reqwest::StatusCode::FORBIDDEN
            {
                return Err(TransportError::Auth(status.to_string()));
            }
            let body = resp
                .text()
                .map_err(|e| TransportError::Network(e.to_string()))?;
            if !status.is_success() {
                return Err(TransportError::Network(format!("{status}: {body}")));
            }
            parse_chat_reply(&body)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Blocks, Genome};
    use rand::SeedableRng;

    struct Scripted {
        replies: Vec<Result<String, TransportError>>,
        calls: usize,
    }

    impl Transport for Scripted {
        fn send(&mut self, request: &ChatRequest) -> Result<String, TransportError> {
            assert_eq!(request.model, "m");
            let r = self.replies[self.calls.min(self.replies.len() - 1)].clone();
            self.calls += 1;
            r
        }
    }

    fn parent() -> Candidate {
        let g = Genome {
            step_size: 0.25,
            population: 8.0,
            restart_prob: 0.1,
            crossover_weight: 0.3,
            tail_shape: 0.0,
        };
        Candidate::new(g, Blocks::all())
    }

    fn mutator(replies: Vec<Result<String, TransportError>>) -> LlmMutator<Scripted> {
        LlmMutator::new(
            LlmConfig::new("http://localhost", "m"),
            Scripted { replies, calls: 0 },
        )
    }

    #[test]
    fn echoed_code_block_is_accepted() {
        let p = parent();
        let reply = format!("Here you go:\n```python\n{}```\nDone.", p.code_text);
        let mut m = mutator(vec![Ok(reply)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = m
            .mutate(&p, MutationKind::RefineSimplify, &mut rng)
            .unwrap();
        assert_eq!(c.genome, p.genome);
        assert_eq!(c.code_text, p.code_text);
        assert_eq!(m.transport.calls, 1);
    }

    #[test]
    fn missing_fence_is_retried() {
        let p = parent();
        let good = format!("```\n{}```", p.code_text);
        let mut m = mutator(vec![Ok("no code here".into()), Ok(good)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(m.mutate(&p, MutationKind::Adaptive, &mut rng).is_ok());
        assert_eq!(m.transport.calls, 2);
    }

    #[test]
    fn always_failing_endpoint_aborts_after_limit() {
        let mut m = mutator(vec![Err(TransportError::Network("refused".into()))]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = m.mutate(&parent(), MutationKind::RandomNew, &mut rng);
        assert!(matches!(r, Err(HarnessError::MutationUnavailable(_))));
        assert_eq!(m.transport.calls, 3);
    }

    #[test]
    fn auth_failure_aborts_immediately() {
        let mut m = mutator(vec![Err(TransportError::Auth("401".into()))]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(m.initial(&mut rng).is_err());
        assert_eq!(m.transport.calls, 1);
    }

    #[test]
    fn chat_reply_parsing() {
        let body =
            r#"{"id":"x","choices":[{"index":0,"message":{"role":"assistant","content":"hi"}}]}"#;
        assert_eq!(parse_chat_reply(body).unwrap(), "hi");
        assert!(parse_chat_reply(r#"{"choices":[]}"#).is_err());
        assert!(parse_chat_reply("not json").is_err());
    }

    #[test]
    fn code_block_extraction() {
        assert_eq!(
            extract_code_block("a\n```py\nx = 1\n```\n").unwrap(),
            "x = 1\n"
        );
        assert_eq!(extract_code_block("```\ny\n```").unwrap(), "y\n");
        assert_eq!(extract_code_block("```py\nunterminated"), None);
        assert_eq!(extract_code_block("plain"), None);
    }
}
