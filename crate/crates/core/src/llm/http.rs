use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{with_retries, ChatBackend, ChatRequest, ChatResponse, LlmError, TokenUsage};

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    1000
}

/// Settings for an OpenAI-compatible chat-completions endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Full URL, e.g. `https://api.openai.com/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: default_api_key_env(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff_ms(),
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    /// Fails with a configuration error when the API key variable is unset.
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Ok(HttpBackend { config, api_key, agent })
    }

    fn attempt(&self, body: &Value) -> Result<ChatResponse, LlmError> {
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| LlmError::Transient(format!("request failed: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Transient(format!("reading response failed: {e}")))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(LlmError::Config(format!("endpoint rejected credentials ({status})"))),
            429 | 500..=599 => return Err(LlmError::Transient(format!("status {status}"))),
            _ => return Err(LlmError::Backend(format!("status {status}: {}", truncate(&text, 200)))),
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| LlmError::Backend(format!("invalid JSON body: {e}")))?;
        let content = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| LlmError::Backend("response has no choices[0].message.content".into()))?;
        let usage = TokenUsage {
            prompt_tokens: v.pointer("/usage/prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
            completion_tokens: v.pointer("/usage/completion_tokens").and_then(Value::as_u64).unwrap_or(0),
        };
        Ok(ChatResponse { text: content.to_string(), token_usage: usage, backend_id: self.backend_id() })
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

impl ChatBackend for HttpBackend {
    fn backend_id(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let body = json!({
            "model": self.config.model,
            "messages": request.messages,
            "temperature": request.temperature,
        });
        with_retries(self.config.max_retries, Duration::from_millis(self.config.backoff_ms), || self.attempt(&body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Message, Purpose};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};
    use std::thread;

    /// Serves canned (status, body) replies in order and records request bodies.
    fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let seen2 = seen.clone();
        thread::spawn(move || {
            for (status, body) in replies {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0u8; len];
                reader.read_exact(&mut buf).unwrap();
                seen2.lock().unwrap().push(String::from_utf8(buf).unwrap());
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
        });
        (url, seen)
    }

    fn ok_body(text: &str) -> String {
        json!({
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": 12, "completion_tokens": 3}
        })
        .to_string()
    }

    fn backend(url: String, key_var: &str) -> Result<HttpBackend, LlmError> {
        let mut cfg = HttpConfig::new(url, "test-model");
        cfg.api_key_env = key_var.into();
        cfg.backoff_ms = 1;
        cfg.timeout_secs = 5;
        HttpBackend::new(cfg)
    }

    fn req() -> ChatRequest {
        ChatRequest::new(Purpose::Act, vec![Message::system("s"), Message::user("u")], 0.5)
    }

    #[test]
    fn missing_key_is_config_error() {
        let err = backend("http://127.0.0.1:1/x".into(), "GLOW_TEST_UNSET_KEY_VAR").err().unwrap();
        assert!(matches!(err, LlmError::Config(_)));
    }

    #[test]
    fn success_parses_content_and_usage() {
        std::env::set_var("GLOW_TEST_KEY_A", "secret");
        let (url, seen) = serve(vec![(200, ok_body("{\"thought\":\"t\",\"action\":\"north\"}"))]);
        let mut b = backend(url, "GLOW_TEST_KEY_A").unwrap();
        let r = b.complete(&req()).unwrap();
        assert!(r.text.contains("north"));
        assert_eq!(r.token_usage, TokenUsage { prompt_tokens: 12, completion_tokens: 3 });
        let body: Value = serde_json::from_str(&seen.lock().unwrap()[0]).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["temperature"], 0.5);
        assert_eq!(body["messages"][1]["role"], "user");
    }

    #[test]
    fn retries_server_errors() {
        std::env::set_var("GLOW_TEST_KEY_B", "secret");
        let (url, seen) = serve(vec![(503, "{}".into()), (429, "{}".into()), (200, ok_body("fine"))]);
        let mut b = backend(url, "GLOW_TEST_KEY_B").unwrap();
        assert_eq!(b.complete(&req()).unwrap().text, "fine");
        assert_eq!(seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn unauthorized_is_config_error() {
        std::env::set_var("GLOW_TEST_KEY_C", "secret");
        let (url, _) = serve(vec![(401, "{}".into())]);
        let mut b = backend(url, "GLOW_TEST_KEY_C").unwrap();
        assert!(matches!(b.complete(&req()), Err(LlmError::Config(_))));
    }
}
