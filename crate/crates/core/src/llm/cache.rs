use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatBackend, ChatRequest, ChatResponse, LlmError, TokenUsage};
use crate::model::hex_string;

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    text: String,
}

/// Memoizes completions keyed by backend id and request content.
///
/// With a directory, every process appends to its own JSONL file so that
/// concurrent runs never interleave writes; all files are loaded on start.
/// Cache hits report zero token usage.
pub struct CachedBackend<B> {
    inner: B,
    entries: HashMap<String, String>,
    file: Option<File>,
    hits: u64,
    misses: u64,
}

impl<B: ChatBackend> CachedBackend<B> {
    pub fn in_memory(inner: B) -> Self {
        CachedBackend { inner, entries: HashMap::new(), file: None, hits: 0, misses: 0 }
    }

    pub fn persistent(inner: B, dir: &Path, tag: &str) -> Result<Self, LlmError> {
        fs::create_dir_all(dir)?;
        let mut entries = HashMap::new();
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                // a torn final line from a killed process is skipped
                if let Ok(rec) = serde_json::from_str::<CacheRecord>(&line) {
                    entries.insert(rec.key, rec.text);
                }
            }
        }
        let name = format!("cache-{}-{}.jsonl", std::process::id(), tag);
        let file = OpenOptions::new().create(true).append(true).open(dir.join(name))?;
        Ok(CachedBackend { inner, entries, file: Some(file), hits: 0, misses: 0 })
    }

    fn key(&self, request: &ChatRequest) -> String {
        let mut h = Sha256::new();
        h.update(self.inner.backend_id().as_bytes());
        h.update([0u8]);
        h.update(request.digest().as_bytes());
        hex_string(&h.finalize())
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: ChatBackend> ChatBackend for CachedBackend<B> {
    fn backend_id(&self) -> String {
        self.inner.backend_id()
    }

    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let key = self.key(request);
        if let Some(text) = self.entries.get(&key) {
            self.hits += 1;
            return Ok(ChatResponse {
                text: text.clone(),
                token_usage: TokenUsage::default(),
                backend_id: self.inner.backend_id(),
            });
        }
        self.misses += 1;
        let resp = self.inner.complete(request)?;
        if let Some(file) = self.file.as_mut() {
            let rec = CacheRecord { key: key.clone(), text: resp.text.clone() };
            writeln!(file, "{}", serde_json::to_string(&rec).expect("record serializes"))?;
        }
        self.entries.insert(key, resp.text.clone());
        Ok(resp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Message, Purpose};

    struct Counting {
        calls: u32,
    }

    impl ChatBackend for Counting {
        fn backend_id(&self) -> String {
            "counting".into()
        }
        fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
            self.calls += 1;
            Ok(ChatResponse {
                text: format!("reply to {}", request.messages[0].content),
                token_usage: TokenUsage { prompt_tokens: 10, completion_tokens: 2 },
                backend_id: self.backend_id(),
            })
        }
    }

    fn req(s: &str) -> ChatRequest {
        ChatRequest::new(Purpose::Act, vec![Message::user(s)], 0.5)
    }

    #[test]
    fn hit_returns_same_text_with_zero_tokens() {
        let mut b = CachedBackend::in_memory(Counting { calls: 0 });
        let first = b.complete(&req("a")).unwrap();
        let second = b.complete(&req("a")).unwrap();
        assert_eq!(first.text, second.text);
        assert_eq!(second.token_usage, TokenUsage::default());
        assert_eq!(first.token_usage.prompt_tokens, 10);
        b.complete(&req("b")).unwrap();
        assert_eq!((b.hits(), b.misses()), (1, 2));
        assert_eq!(b.into_inner().calls, 2);
    }

    #[test]
    fn persists_across_instances() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut b = CachedBackend::persistent(Counting { calls: 0 }, dir.path(), "one").unwrap();
            b.complete(&req("x")).unwrap();
        }
        let mut b = CachedBackend::persistent(Counting { calls: 0 }, dir.path(), "two").unwrap();
        let r = b.complete(&req("x")).unwrap();
        assert_eq!(r.text, "reply to x");
        assert_eq!(b.into_inner().calls, 0);
    }

    #[test]
    fn torn_lines_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("cache-1-x.jsonl"), "{\"key\": \"abc\", \"te").unwrap();
        let mut b = CachedBackend::persistent(Counting { calls: 0 }, dir.path(), "y").unwrap();
        b.complete(&req("x")).unwrap();
        assert_eq!(b.misses(), 1);
    }
}
