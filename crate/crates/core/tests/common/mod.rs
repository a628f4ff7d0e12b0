#![allow(dead_code)]

use glow_core::llm::{ChatBackend, ChatRequest, ChatResponse, LlmError, Purpose, ScriptedOracle};

/// Wraps the scripted oracle and records the purpose of every call.
pub struct Recording {
    pub inner: ScriptedOracle,
    pub calls: Vec<Purpose>,
    pub requests: Vec<ChatRequest>,
}

impl Recording {
    pub fn new(seed: u64) -> Self {
        Recording { inner: ScriptedOracle::new(seed), calls: Vec::new(), requests: Vec::new() }
    }

    pub fn count(&self, p: Purpose) -> usize {
        self.calls.iter().filter(|&&c| c == p).count()
    }
}

impl ChatBackend for Recording {
    fn backend_id(&self) -> String {
        "recording".into()
    }

    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        self.calls.push(request.purpose);
        self.requests.push(request.clone());
        self.inner.complete(request)
    }
}

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}
