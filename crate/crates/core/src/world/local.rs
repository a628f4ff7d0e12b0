use super::parse::parse_w_local;
use super::prompts::{fill, PromptSet};
use super::render::{render_attempts, section, ATTEMPTS_HEADER, FRONTIER_HEADER, W_LOCAL_HEADER};
use super::WLocal;
use crate::llm::{ChatBackend, ChatRequest, ChatResponse, LlmError, Message, Purpose};
use crate::model::Trajectory;

/// Multi-path advantage reflection over the phase's attempts so far, using
/// the rendered frontier as a baseline and the previous W_local as memory.
pub fn reflect_mar(
    attempts: &[Trajectory],
    start_observation: &str,
    frontier_text: &str,
    previous: &WLocal,
    backend: &mut dyn ChatBackend,
    prompts: &PromptSet,
    temperature: f64,
) -> Result<(WLocal, ChatResponse), LlmError> {
    let prompt = fill(
        &prompts.mar,
        &[
            ("w_local_block", &section(W_LOCAL_HEADER, &previous.raw_text)),
            ("frontier_block", &section(FRONTIER_HEADER, frontier_text)),
            ("local_block", &section(ATTEMPTS_HEADER, &render_attempts(attempts, start_observation))),
        ],
    );
    let request = ChatRequest::new(Purpose::Reflect, vec![Message::user(prompt)], temperature);
    let response = backend.complete(&request)?;
    let w_local = WLocal { entries: parse_w_local(&response.text), raw_text: response.text.clone() };
    Ok((w_local, response))
}

/// Single-trajectory self-reflection. The result carries text only; new
/// reflections are appended to earlier ones from the same phase.
pub fn reflect_reflexion(
    latest: &Trajectory,
    start_observation: &str,
    previous: &WLocal,
    backend: &mut dyn ChatBackend,
    prompts: &PromptSet,
    temperature: f64,
) -> Result<(WLocal, ChatResponse), LlmError> {
    let attempt = render_attempts(std::slice::from_ref(latest), start_observation);
    let prompt = fill(&prompts.reflexion, &[("local_block", &attempt)]);
    let request = ChatRequest::new(Purpose::Reflect, vec![Message::user(prompt)], temperature);
    let response = backend.complete(&request)?;
    let raw_text = if previous.is_empty() {
        response.text.trim().to_string()
    } else {
        format!("{}\n\n{}", previous.raw_text.trim_end(), response.text.trim())
    };
    Ok((WLocal { raw_text, entries: Vec::new() }, response))
}
