//! Language-model hints over an OpenAI-compatible chat-completion API.

mod client;
mod parse;
mod prompt;
pub mod stub;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{ClientStats, LlmClient};
pub use parse::{parse_prediction, ParseFailure, Prediction};
pub use prompt::{build_prompt, system_message, Prompt, PROMPT_VERSION};

use crate::hints::{Hint, HintError, HintProvider, HintQuery};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub cache_enabled: bool,
    pub cache_dir: PathBuf,
    /// Cap on network queries over the client's lifetime.
    pub max_requests: Option<u64>,
    /// Maximum requests in flight at once.
    pub concurrency: usize,
    /// Extra queries after an unparseable answer before falling back to neutral.
    pub parse_retries: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "llama3-70b".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 0.0,
            max_tokens: 512,
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_base_ms: 500,
            cache_enabled: true,
            cache_dir: PathBuf::from(".hintgrid-cache/llm"),
            max_requests: None,
            concurrency: 4,
            parse_retries: 0,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err("llm.timeout_secs: must be positive".into());
        }
        if self.concurrency == 0 {
            return Err("llm.concurrency: must be at least 1".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err("llm.temperature: must lie in [0, 2]".into());
        }
        if self.endpoint.is_empty() {
            return Err("llm.endpoint: must not be empty".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LlmError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("authentication rejected (HTTP {0})")]
    AuthFailed(u16),
    #[error("request budget of {0} exhausted")]
    BudgetExceeded(u64),
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("response cache: {0}")]
    Cache(String),
}

impl From<LlmError> for HintError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::BudgetExceeded(_) => HintError::BudgetExceeded,
            other => HintError::Llm(other.to_string()),
        }
    }
}

/// Hint provider backed by a language model.
pub struct LlmProvider {
    client: LlmClient,
}

impl LlmProvider {
    pub fn new(config: LlmConfig) -> Result<LlmProvider, LlmError> {
        Ok(LlmProvider {
            client: LlmClient::new(config)?,
        })
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }
}

impl HintProvider for LlmProvider {
    fn name(&self) -> &str {
        "llm"
    }

    fn get_hint(&self, query: &HintQuery<'_>) -> Result<Hint, HintError> {
        let prompt = build_prompt(query.encoded(), query.history, query.mission);
        let mut attempts = 0;
        loop {
            let raw = self.client.query(&prompt)?;
            match parse_prediction(&raw) {
                Ok(p) => return Ok(p.into_hint()),
                Err(e) if attempts >= self.client.config().parse_retries => {
                    return Err(HintError::Parse(e.to_string()))
                }
                Err(_) => attempts += 1,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::EncodingKind;
    use crate::env::{reset, Action, EnvConfig, TaskKind};
    use crate::hints::{ActionHistory, Subgoal};
    use stub::{ScriptedReply, StubServer};

    fn provider(url: String) -> LlmProvider {
        LlmProvider::new(LlmConfig {
            endpoint: url,
            cache_enabled: false,
            backoff_base_ms: 1,
            ..LlmConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn provider_round_trip() {
        let stub = StubServer::start(vec![ScriptedReply::content(
            "thinking... Prediction(reasoning=\"turn\", primitive_action=1, subgoal=ExploreSubgoal)",
        )]);
        let p = provider(stub.url());
        let (s, m) = reset(&EnvConfig::new(TaskKind::GoToObj, 8), 1).unwrap();
        let h = ActionHistory::new(5);
        let q = HintQuery::new(&s, &m, &h, EncodingKind::AsciiGrid, 0, 5);
        let hint = p.get_hint(&q).unwrap();
        assert_eq!(hint.action, Some(Action::TurnRight));
        assert_eq!(hint.subgoal, Subgoal::Explore);
        let body: serde_json::Value = serde_json::from_str(&stub.request_bodies()[0]).unwrap();
        assert_eq!(body["messages"][1]["content"].as_str().unwrap().matches("MISSION:").count(), 1);
        assert_eq!(body["temperature"], 0.0);
    }

    #[test]
    fn parse_failure_surfaces_as_hint_error() {
        let stub = StubServer::start(vec![ScriptedReply::content("I am not sure.")]);
        let p = provider(stub.url());
        let (s, m) = reset(&EnvConfig::new(TaskKind::GoToObj, 8), 1).unwrap();
        let h = ActionHistory::new(5);
        let q = HintQuery::new(&s, &m, &h, EncodingKind::NaturalLanguage, 0, 5);
        assert!(matches!(p.get_hint(&q), Err(HintError::Parse(_))));
        assert_eq!(stub.requests(), 1);
    }

    #[test]
    fn config_validation() {
        let c = LlmConfig {
            timeout_secs: 0.0,
            ..LlmConfig::default()
        };
        assert!(c.validate().is_err());
        assert!(LlmConfig::default().validate().is_ok());
    }
}
