use super::parse::parse_key_states;
use super::prompts::{fill, PromptSet};
use super::render::{render_archive, render_frontier};
use super::{KeyState, WGlobal};
use crate::llm::{parse_index, parse_score, ChatBackend, ChatRequest, ChatResponse, LlmError, Message, Purpose};
use crate::model::{ArchiveEntry, Frontier, SelectionMode, StateArchive};

/// Most archive states ever shown in one selection prompt.
pub const CANDIDATE_CAP: usize = 20;

/// Result of a frontier analysis request.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub w_global: WGlobal,
    /// The backend reply, absent when served from the digest cache or when
    /// the frontier is empty.
    pub response: Option<ChatResponse>,
}

/// Frontier analysis with a single-entry cache keyed by frontier digest.
#[derive(Debug, Default)]
pub struct GlobalModel {
    cached: Option<WGlobal>,
    backend_calls: u64,
}

impl GlobalModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn backend_calls(&self) -> u64 {
        self.backend_calls
    }

    pub fn analyze(
        &mut self,
        frontier: &Frontier,
        backend: &mut dyn ChatBackend,
        prompts: &PromptSet,
        temperature: f64,
    ) -> Result<Analysis, LlmError> {
        if frontier.is_empty() {
            return Ok(Analysis { w_global: WGlobal::empty(), response: None });
        }
        let digest = frontier.digest();
        if let Some(cached) = self.cached.as_ref().filter(|w| w.frontier_digest == digest) {
            return Ok(Analysis { w_global: cached.clone(), response: None });
        }
        let prompt = fill(&prompts.analyze_frontier, &[("frontier_block", &render_frontier(frontier))]);
        let request = ChatRequest::new(Purpose::AnalyzeFrontier, vec![Message::user(prompt)], temperature);
        let response = backend.complete(&request)?;
        self.backend_calls += 1;
        let w_global = WGlobal {
            key_states: parse_key_states(&response.text),
            analysis_text: response.text.clone(),
            frontier_digest: digest,
        };
        self.cached = Some(w_global.clone());
        Ok(Analysis { w_global, response: Some(response) })
    }
}

/// Outcome of choosing the next state to explore from.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Index into the archive's entries.
    pub index: usize,
    pub thought: String,
    /// The greedy fallback was used instead of a model decision.
    pub fallback: bool,
    /// Archive indices offered to the model, in display order.
    pub candidates: Vec<usize>,
    pub responses: Vec<ChatResponse>,
}

/// Archive indices to show the selector: everything when small, otherwise
/// top scorers, entries named by key states and the most recent ones,
/// listed in discovery order.
pub fn candidate_indices(archive: &StateArchive, key_states: &[KeyState], cap: usize) -> Vec<usize> {
    let entries = archive.entries();
    if entries.len() <= cap {
        return (0..entries.len()).collect();
    }
    let mut chosen = vec![false; entries.len()];
    let mut count = 0;
    let mut take = |i: usize, limit: usize, chosen: &mut Vec<bool>| {
        if count < limit && !chosen[i] {
            chosen[i] = true;
            count += 1;
        }
    };
    let mut by_score: Vec<usize> = (0..entries.len()).collect();
    by_score.sort_by_key(|&i| std::cmp::Reverse((entries[i].score, entries[i].discovery_step, i)));
    for &i in &by_score {
        take(i, cap / 2, &mut chosen);
    }
    for i in (0..entries.len()).rev() {
        if key_states.iter().any(|k| k.mentions(&entries[i].observation)) {
            take(i, cap * 3 / 4, &mut chosen);
        }
    }
    for i in (0..entries.len()).rev() {
        take(i, cap, &mut chosen);
    }
    (0..entries.len()).filter(|&i| chosen[i]).collect()
}

/// Highest archive score, ties to the most recent discovery.
pub fn select_greedy(archive: &StateArchive) -> Selection {
    let index = archive.best_by_score().expect("archive is never empty during a run");
    Selection { index, thought: String::new(), fallback: true, candidates: vec![index], responses: Vec::new() }
}

fn single(index: usize) -> Selection {
    Selection { index, thought: String::new(), fallback: false, candidates: vec![index], responses: Vec::new() }
}

fn pick_index(
    archive: &StateArchive,
    candidates: Vec<usize>,
    prompt: String,
    backend: &mut dyn ChatBackend,
    temperature: f64,
) -> Result<Selection, LlmError> {
    let request = ChatRequest::new(Purpose::Select, vec![Message::user(prompt)], temperature);
    let response = backend.complete(&request)?;
    match parse_index(&response.text, candidates.len()) {
        Ok(d) => Ok(Selection {
            index: candidates[d.index],
            thought: d.thought,
            fallback: false,
            candidates,
            responses: vec![response],
        }),
        Err(e) => {
            log::warn!("selection reply unusable ({e}); falling back to best score");
            let mut s = select_greedy(archive);
            s.candidates = candidates;
            s.responses = vec![response];
            Ok(s)
        }
    }
}

fn shown<'a>(archive: &'a StateArchive, candidates: &[usize]) -> Vec<&'a ArchiveEntry> {
    candidates.iter().map(|&i| &archive.entries()[i]).collect()
}

/// Analysis-aligned selection. With no analysis available this is greedy
/// by score and makes no backend call.
pub fn select_state(
    archive: &StateArchive,
    w_global: &WGlobal,
    mode: SelectionMode,
    backend: &mut dyn ChatBackend,
    prompts: &PromptSet,
    temperature: f64,
) -> Result<Selection, LlmError> {
    if archive.len() == 1 {
        return Ok(single(0));
    }
    if w_global.is_empty() {
        return Ok(select_greedy(archive));
    }
    let candidates = candidate_indices(archive, &w_global.key_states, CANDIDATE_CAP);
    match mode {
        SelectionMode::Index => {
            let prompt = fill(
                &prompts.select_state,
                &[
                    ("analysis_block", w_global.analysis_text.trim()),
                    ("archive_block", &render_archive(&shown(archive, &candidates))),
                    ("max_index", &(candidates.len() - 1).to_string()),
                ],
            );
            pick_index(archive, candidates, prompt, backend, temperature)
        }
        SelectionMode::PerState => {
            let mut best: Option<(f64, usize)> = None;
            let mut responses = Vec::with_capacity(candidates.len());
            for (pos, &i) in candidates.iter().enumerate() {
                let prompt = fill(
                    &prompts.select_state_score,
                    &[
                        ("analysis_block", w_global.analysis_text.trim()),
                        ("archive_block", &render_archive(&[&archive.entries()[i]])),
                    ],
                );
                let request = ChatRequest::new(Purpose::Select, vec![Message::user(prompt)], temperature);
                let response = backend.complete(&request)?;
                if let Ok(score) = parse_score(&response.text) {
                    // later candidates are more recent, so >= keeps recency on ties
                    if best.map_or(true, |(b, _)| score >= b) {
                        best = Some((score, pos));
                    }
                }
                responses.push(response);
            }
            Ok(match best {
                Some((score, pos)) => Selection {
                    index: candidates[pos],
                    thought: format!("highest alignment score {score}"),
                    fallback: false,
                    candidates,
                    responses,
                },
                None => {
                    let mut s = select_greedy(archive);
                    s.candidates = candidates;
                    s.responses = responses;
                    s
                }
            })
        }
    }
}

/// Asks for the most promising state without any frontier analysis.
pub fn select_ige(
    archive: &StateArchive,
    backend: &mut dyn ChatBackend,
    prompts: &PromptSet,
    temperature: f64,
) -> Result<Selection, LlmError> {
    if archive.len() == 1 {
        return Ok(single(0));
    }
    let candidates = candidate_indices(archive, &[], CANDIDATE_CAP);
    let prompt = fill(
        &prompts.ige_select,
        &[
            ("archive_block", &render_archive(&shown(archive, &candidates))),
            ("max_index", &(candidates.len() - 1).to_string()),
        ],
    );
    pick_index(archive, candidates, prompt, backend, temperature)
}
