use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::prompt::{Prompt, PROMPT_VERSION};
use super::{LlmConfig, LlmError};

/// Counting semaphore bounding concurrent requests.
struct Limiter {
    free: Mutex<usize>,
    cond: Condvar,
}

impl Limiter {
    fn new(n: usize) -> Limiter {
        Limiter {
            free: Mutex::new(n.max(1)),
            cond: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cond.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cond.notify_one();
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    request: serde_json::Value,
    response: String,
}

/// Request counters, cumulative over the client's lifetime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClientStats {
    /// Queries that reached the network (cache misses).
    pub queries: u64,
    /// HTTP attempts including retries.
    pub http_attempts: u64,
    pub cache_hits: u64,
}

/// Blocking client for an OpenAI-compatible chat-completion endpoint.
pub struct LlmClient {
    config: LlmConfig,
    http: reqwest::blocking::Client,
    limiter: Limiter,
    queries: AtomicU64,
    attempts: AtomicU64,
    cache_hits: AtomicU64,
}

impl LlmClient {
    pub fn new(config: LlmConfig) -> Result<LlmClient, LlmError> {
        config.validate().map_err(LlmError::Config)?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(LlmClient {
            limiter: Limiter::new(config.concurrency),
            config,
            http,
            queries: AtomicU64::new(0),
            attempts: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn stats(&self) -> ClientStats {
        ClientStats {
            queries: self.queries.load(Ordering::SeqCst),
            http_attempts: self.attempts.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
        }
    }

    fn request_body(&self, prompt: &Prompt) -> serde_json::Value {
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        })
    }

    /// Content address of a request: prompt, model and temperature.
    pub fn cache_key(&self, prompt: &Prompt) -> String {
        let mut h = Sha256::new();
        h.update(PROMPT_VERSION.to_le_bytes());
        h.update(self.config.model.as_bytes());
        h.update([0]);
        h.update(self.config.temperature.to_bits().to_le_bytes());
        h.update(prompt.system.as_bytes());
        h.update([0]);
        h.update(prompt.user.as_bytes());
        hex::encode(h.finalize())
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        if !self.config.cache_enabled {
            return None;
        }
        Some(self.config.cache_dir.join(format!("{key}.json")))
    }

    fn cache_read(&self, path: &Path) -> Option<String> {
        let text = fs::read_to_string(path).ok()?;
        serde_json::from_str::<CacheEntry>(&text).ok().map(|e| e.response)
    }

    fn cache_write(&self, path: &Path, request: serde_json::Value, response: &str) -> Result<(), LlmError> {
        let dir = path.parent().unwrap_or(Path::new("."));
        fs::create_dir_all(dir).map_err(|e| LlmError::Cache(e.to_string()))?;
        let entry = CacheEntry {
            request,
            response: response.to_string(),
        };
        let text = serde_json::to_string_pretty(&entry).map_err(|e| LlmError::Cache(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| LlmError::Cache(e.to_string()))?;
        std::io::Write::write_all(&mut tmp, text.as_bytes()).map_err(|e| LlmError::Cache(e.to_string()))?;
        tmp.persist(path).map_err(|e| LlmError::Cache(e.to_string()))?;
        Ok(())
    }

    /// Assistant message content for `prompt`, from cache or the endpoint.
    pub fn query(&self, prompt: &Prompt) -> Result<String, LlmError> {
        let key = self.cache_key(prompt);
        let path = self.cache_path(&key);
        if let Some(hit) = path.as_deref().and_then(|p| self.cache_read(p)) {
            self.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(hit);
        }
        let n = self.queries.fetch_add(1, Ordering::SeqCst);
        if let Some(max) = self.config.max_requests {
            if n >= max {
                self.queries.fetch_sub(1, Ordering::SeqCst);
                return Err(LlmError::BudgetExceeded(max));
            }
        }
        let body = self.request_body(prompt);
        let response = {
            let _permit = self.limiter.acquire();
            self.send_with_retry(&body)?
        };
        if let Some(p) = path {
            if let Err(e) = self.cache_write(&p, body, &response) {
                log::warn!("could not write response cache: {e}");
            }
        }
        Ok(response)
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.config.backoff_base_ms as f64 * 2f64.powi(attempt as i32);
        let jitter = rand::thread_rng().gen_range(0.5..=1.0);
        Duration::from_secs_f64(base * jitter / 1e3)
    }

    fn send_with_retry(&self, body: &serde_json::Value) -> Result<String, LlmError> {
        let api_key = std::env::var(&self.config.api_key_env).ok();
        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt - 1));
            }
            self.attempts.fetch_add(1, Ordering::SeqCst);
            let mut req = self.http.post(&self.config.endpoint).json(body);
            if let Some(k) = &api_key {
                req = req.bearer_auth(k);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.as_u16() == 401 || status.as_u16() == 403 {
                        return Err(LlmError::AuthFailed(status.as_u16()));
                    }
                    if status.as_u16() == 429 || status.is_server_error() {
                        last_error = format!("HTTP {status}");
                        log::debug!("retryable response {status} (attempt {attempt})");
                        continue;
                    }
                    if !status.is_success() {
                        return Err(LlmError::Transport(format!("HTTP {status}")));
                    }
                    let value: serde_json::Value =
                        resp.json().map_err(|e| LlmError::BadResponse(e.to_string()))?;
                    return value["choices"][0]["message"]["content"]
                        .as_str()
                        .map(str::to_string)
                        .ok_or_else(|| LlmError::BadResponse("missing choices[0].message.content".into()));
                }
                Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => {
                    last_error = e.to_string();
                    log::debug!("transport error (attempt {attempt}): {e}");
                }
                Err(e) => return Err(LlmError::Transport(e.to_string())),
            }
        }
        Err(LlmError::Transport(format!(
            "giving up after {} attempts: {last_error}",
            self.config.max_retries + 1
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::stub::{ScriptedReply, StubServer};

    fn config(url: String, cache: Option<&Path>) -> LlmConfig {
        LlmConfig {
            endpoint: url,
            backoff_base_ms: 1,
            timeout_secs: 5.0,
            cache_enabled: cache.is_some(),
            cache_dir: cache.map(Path::to_path_buf).unwrap_or_default(),
            ..LlmConfig::default()
        }
    }

    fn prompt() -> Prompt {
        Prompt {
            system: "sys".into(),
            user: "user".into(),
        }
    }

    #[test]
    fn retries_then_succeeds() {
        let stub = StubServer::start(vec![
            ScriptedReply::status(500),
            ScriptedReply::status(500),
            ScriptedReply::content("ok"),
        ]);
        let client = LlmClient::new(config(stub.url(), None)).unwrap();
        assert_eq!(client.query(&prompt()).unwrap(), "ok");
        assert_eq!(stub.requests(), 3);
        assert_eq!(client.stats().http_attempts, 3);
    }

    #[test]
    fn auth_failure_is_not_retried() {
        let stub = StubServer::start(vec![ScriptedReply::status(401), ScriptedReply::content("x")]);
        let client = LlmClient::new(config(stub.url(), None)).unwrap();
        assert!(matches!(client.query(&prompt()), Err(LlmError::AuthFailed(401))));
        assert_eq!(stub.requests(), 1);
    }

    #[test]
    fn cache_hit_skips_network() {
        let dir = tempfile::tempdir().unwrap();
        let stub = StubServer::start(vec![ScriptedReply::content("cached")]);
        let client = LlmClient::new(config(stub.url(), Some(dir.path()))).unwrap();
        assert_eq!(client.query(&prompt()).unwrap(), "cached");
        assert_eq!(client.query(&prompt()).unwrap(), "cached");
        assert_eq!(stub.requests(), 1);
        assert_eq!(client.stats().cache_hits, 1);
        let files: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
    }

    #[test]
    fn budget_caps_network_queries() {
        let stub = StubServer::start(vec![ScriptedReply::content("a")]);
        let mut cfg = config(stub.url(), None);
        cfg.max_requests = Some(2);
        let client = LlmClient::new(cfg).unwrap();
        client.query(&prompt()).unwrap();
        client.query(&prompt()).unwrap();
        assert!(matches!(client.query(&prompt()), Err(LlmError::BudgetExceeded(2))));
        assert_eq!(stub.requests(), 2);
    }

    #[test]
    fn retries_exhausted() {
        let stub = StubServer::start(vec![ScriptedReply::status(429)]);
        let mut cfg = config(stub.url(), None);
        cfg.max_retries = 2;
        let client = LlmClient::new(cfg).unwrap();
        assert!(matches!(client.query(&prompt()), Err(LlmError::Transport(_))));
        assert_eq!(stub.requests(), 3);
    }
}
