use serde_json::{Map, Value};

use super::{ActionDecision, IndexDecision, LlmError};

/// Returns the first JSON object embedded in `text` that has every key in
/// `required`. Tolerates prose and code fences around the object.
fn find_object(text: &str, required: &[&str]) -> Option<Map<String, Value>> {
    for (pos, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[pos..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            if required.iter().all(|k| map.contains_key(*k)) {
                return Some(map);
            }
        }
    }
    None
}

fn string_field(map: &Map<String, Value>, key: &str) -> Option<String> {
    match map.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

fn integer_field(map: &Map<String, Value>, key: &str) -> Option<i64> {
    match map.get(key)? {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Extracts `{"thought": ..., "action": ...}` from a policy response.
pub fn parse_action(text: &str) -> Result<ActionDecision, LlmError> {
    let map = find_object(text, &["thought", "action"])
        .ok_or_else(|| LlmError::Parse("no JSON object with \"thought\" and \"action\"".into()))?;
    let action = string_field(&map, "action")
        .map(|a| a.trim().to_string())
        .filter(|a| !a.is_empty())
        .ok_or_else(|| LlmError::Parse("\"action\" is empty".into()))?;
    let thought = string_field(&map, "thought").unwrap_or_default();
    Ok(ActionDecision { thought, action })
}

/// Extracts `{"thought": ..., "index": ...}` and checks `index < len`.
pub fn parse_index(text: &str, len: usize) -> Result<IndexDecision, LlmError> {
    let map = find_object(text, &["thought", "index"])
        .ok_or_else(|| LlmError::Parse("no JSON object with \"thought\" and \"index\"".into()))?;
    let index = integer_field(&map, "index").ok_or_else(|| LlmError::Parse("\"index\" is not an integer".into()))?;
    if index < 0 || index as u64 >= len as u64 {
        return Err(LlmError::Parse(format!("index {index} out of range 0..{len}")));
    }
    let thought = string_field(&map, "thought").unwrap_or_default();
    Ok(IndexDecision { thought, index: index as usize })
}

/// Extracts `{"thought": ..., "score": ...}` used by per-state scoring.
pub fn parse_score(text: &str) -> Result<f64, LlmError> {
    let map = find_object(text, &["score"]).ok_or_else(|| LlmError::Parse("no JSON object with \"score\"".into()))?;
    let score = match map.get("score") {
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => s.trim().parse().ok(),
        _ => None,
    };
    score.filter(|s| s.is_finite()).ok_or_else(|| LlmError::Parse("\"score\" is not a number".into()))
}
