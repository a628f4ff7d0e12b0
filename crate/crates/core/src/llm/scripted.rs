//! Deterministic stand-in for a language model. Every reply is a pure
//! function of (purpose, prompt text, seed), computed by reading the rendered
//! prompt back: trajectory listings, archive candidates and earlier model
//! outputs.
//!
//! * act: follow a W_local advantage whose state descriptor occurs in the
//!   observation; otherwise an action not yet taken from the current
//!   situation in this episode, in seed-salted hash order. A situation is the
//!   room view plus the items carried. Looking and dropping things come last.
//!   Nothing else is remembered across attempts, so only reflection changes
//!   what a repeated attempt does.
//! * select: archive score plus 50 when a high-potential key state names the
//!   candidate's location; argmax with ties to the later candidate.
//! * analyze: deaths and stalls at the end of frontier trajectories become key
//!   states with potential = achieved + 25.
//! * reflect: compare what actions did from the same observed state across
//!   trajectories: immediate rewards, deaths, and deaths explained by the
//!   items the surviving trajectory carried.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use regex::Regex;
use serde_json::json;

use super::{parse_action, ChatBackend, ChatRequest, ChatResponse, LlmError, Message, Purpose, Role, TokenUsage};
use crate::world::render::{location_of, state_key, ATTEMPTS_HEADER, FRONTIER_HEADER, SEPARATOR, W_LOCAL_HEADER};
use crate::world::{parse_key_states, parse_w_local, Advantage, LocalEntry};

/// Bonus added to candidates named by a high-potential key state.
pub const SELECT_BONUS: i64 = 50;
/// Optimism added to achieved values in frontier analyses.
pub const POTENTIAL_BONUS: i64 = 25;
/// Most entries emitted by one reflection.
pub const MAX_REFLECT_ENTRIES: usize = 4;

const MAR_MARKER: &str = "identify KEY STATE ADVANTAGES";
const MAR_TAIL: &str = "Analyze all trajectories";
const ANALYSIS_HEADER: &str = "=== STRATEGIC GAME ANALYSIS ===";
const DEATH_MARK: &str = "You have died";
const WIN_MARK: &str = "You have won";

#[derive(Debug)]
pub struct ScriptedOracle {
    seed: u64,
    // parsed form of the last episode context seen; a pure memo
    context_memo: Mutex<Option<(String, Arc<Knowledge>)>>,
}

impl Clone for ScriptedOracle {
    fn clone(&self) -> Self {
        ScriptedOracle::new(self.seed)
    }
}

impl ScriptedOracle {
    pub fn new(seed: u64) -> Self {
        ScriptedOracle { seed, context_memo: Mutex::new(None) }
    }

    /// Reply text for a request; `complete` wraps this.
    pub fn respond(&self, request: &ChatRequest) -> String {
        match request.purpose {
            Purpose::Act => self.act(&request.messages),
            Purpose::Select => select(&request.rendered()),
            Purpose::AnalyzeFrontier => analyze(&request.rendered()),
            Purpose::Reflect => {
                let prompt = request.rendered();
                if prompt.contains(MAR_MARKER) {
                    reflect_mar(&prompt)
                } else {
                    reflexion(&prompt)
                }
            }
        }
    }

    fn knowledge(&self, first: &str) -> Arc<Knowledge> {
        let mut memo = self.context_memo.lock().unwrap_or_else(|p| p.into_inner());
        if let Some((text, k)) = memo.as_ref() {
            if text == first {
                return Arc::clone(k);
            }
        }
        let k = Arc::new(Knowledge::from_context(first));
        *memo = Some((first.to_string(), Arc::clone(&k)));
        k
    }

    fn act(&self, messages: &[Message]) -> String {
        let Some(first) = messages.iter().find(|m| m.role == Role::User) else {
            return decision("no observation found", "look");
        };
        let known = self.knowledge(&first.content);
        let episode = Episode::walk(messages, &known.base_inventory);
        let Some(current) = episode.current.as_ref() else {
            return decision("no observation found", "look");
        };
        let valid = &current.valid_actions;
        if valid.is_empty() {
            return decision("no actions offered", "look");
        }
        let here = situation(&current.observation, &episode.inventory);
        let loc = location_of(&current.observation);
        let tried = |a: &str| episode.tried.contains(&(here.clone(), a.to_string()));

        let applicable: Vec<&LocalEntry> = known
            .w_local
            .iter()
            .filter(|e| !e.state_descriptor.is_empty() && current.observation.contains(&e.state_descriptor))
            .collect();
        let mut avoided: HashSet<&str> = HashSet::new();
        for adv in applicable.iter().flat_map(|e| e.advantages.iter()) {
            let met = condition_met(&adv.effect, &episode.inventory);
            if (adv.avoid && met != Some(false)) || (!adv.avoid && met == Some(false)) {
                avoided.insert(adv.action.as_str());
            }
        }
        for entry in &applicable {
            for adv in entry.advantages.iter().filter(|a| !a.avoid) {
                if valid.contains(&adv.action) && !avoided.contains(adv.action.as_str()) && !tried(&adv.action) {
                    return decision(&format!("advantage noted at {}: {}", entry.state_descriptor, adv.effect), &adv.action);
                }
            }
        }

        let allowed: Vec<&String> = {
            let v: Vec<&String> = valid.iter().filter(|a| !avoided.contains(a.as_str())).collect();
            if v.is_empty() {
                valid.iter().collect()
            } else {
                v
            }
        };
        let untried = allowed
            .iter()
            .filter(|a| !is_idle(a) && !tried(a))
            .min_by_key(|a| fnv(self.seed, &[&here, a]));
        if let Some(a) = untried {
            return decision(&format!("{a} has not been tried in the {loc} yet"), a);
        }
        let step_salt = current.number.to_string();
        let busy: Vec<&String> = allowed.iter().copied().filter(|a| !is_idle(a)).collect();
        let pool = if busy.is_empty() { &allowed } else { &busy };
        match pool.iter().min_by_key(|a| fnv(self.seed, &[&step_salt, &here, a])) {
            Some(a) => decision(&format!("everything in the {loc} has been tried; trying {a} again"), a),
            None => decision("no actions offered", "look"),
        }
    }
}

impl ChatBackend for ScriptedOracle {
    fn backend_id(&self) -> String {
        "scripted".into()
    }

    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let text = self.respond(request);
        let prompt_chars: usize = request.messages.iter().map(|m| m.content.chars().count()).sum();
        let usage = TokenUsage {
            prompt_tokens: prompt_chars.div_ceil(4) as u64,
            completion_tokens: text.chars().count().div_ceil(4) as u64,
        };
        Ok(ChatResponse { text, token_usage: usage, backend_id: self.backend_id() })
    }
}

/// 64-bit FNV-1a over the seed and the given parts.
pub fn fnv(seed: u64, parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&seed.to_le_bytes());
    for p in parts {
        eat(p.as_bytes());
        eat(&[0xff]);
    }
    h
}

fn decision(thought: &str, action: &str) -> String {
    json!({"thought": thought, "action": action}).to_string()
}

/// Actions that make no progress on their own: looking around and putting
/// things down. Chosen only when nothing else is available.
fn is_idle(action: &str) -> bool {
    let a = action.trim();
    ["look", "l", "inventory", "i", "wait"].contains(&a) || a.starts_with("drop ")
}

/// Applies the visible effect of a take/drop to the carried items.
fn carry(inventory: &mut BTreeSet<String>, action: &str, observation: &str) {
    if let Some(item) = action.strip_prefix("take ") {
        if observation.starts_with("Taken") {
            inventory.insert(item.trim().to_string());
        }
    } else if let Some(item) = action.strip_prefix("drop ") {
        if observation.starts_with("Dropped") {
            inventory.remove(item.trim());
        }
    }
}

fn carried_text(inventory: &BTreeSet<String>) -> String {
    if inventory.is_empty() {
        "nothing".into()
    } else {
        inventory.iter().cloned().collect::<Vec<_>>().join(", ")
    }
}

fn situation(observation: &str, inventory: &BTreeSet<String>) -> String {
    format!("{} | carrying: {}", state_key(observation), carried_text(inventory))
}

fn condition_res() -> &'static (Regex, Regex) {
    static RE: OnceLock<(Regex, Regex)> = OnceLock::new();
    RE.get_or_init(|| {
        (
            Regex::new(r"only (?:safe )?when carrying the ([\w-]+)").expect("valid regex"),
            Regex::new(r"while carrying only: ([\w, -]+)").expect("valid regex"),
        )
    })
}

/// Whether the inventory condition stated in an advantage holds; `None`
/// when the advantage states no condition.
fn condition_met(effect: &str, inventory: &BTreeSet<String>) -> Option<bool> {
    let (needs, only) = condition_res();
    if let Some(c) = needs.captures(effect) {
        return Some(inventory.contains(&c[1]));
    }
    if let Some(c) = only.captures(effect) {
        let listed: BTreeSet<String> =
            c[1].split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty() && s != "nothing").collect();
        return Some(&listed == inventory);
    }
    None
}

/// What the context part of an episode's first message reveals.
#[derive(Debug, Default)]
struct Knowledge {
    w_local: Vec<LocalEntry>,
    /// Items carried at the start of the episode, read off "drop" actions.
    base_inventory: BTreeSet<String>,
}

impl Knowledge {
    fn from_context(first: &str) -> Self {
        let base_inventory = parse_step(first)
            .map(|s| s.valid_actions.iter().filter_map(|a| a.strip_prefix("drop ")).map(str::to_string).collect())
            .unwrap_or_default();
        let w_local = parse_w_local(section_of(first, W_LOCAL_HEADER, &[FRONTIER_HEADER, ATTEMPTS_HEADER, SEPARATOR]));
        Knowledge { w_local, base_inventory }
    }
}

/// The current episode as read from the chat history.
#[derive(Debug, Default)]
struct Episode {
    current: Option<StepPrompt>,
    inventory: BTreeSet<String>,
    /// (situation, action) pairs already taken this episode.
    tried: HashSet<(String, String)>,
}

impl Episode {
    fn walk(messages: &[Message], base_inventory: &BTreeSet<String>) -> Self {
        let mut ep = Episode { inventory: base_inventory.clone(), ..Episode::default() };
        let mut pending: Option<String> = None;
        for m in messages {
            match m.role {
                Role::User => {
                    let Some(step) = parse_step(&m.content) else { continue };
                    if let Some(action) = pending.take() {
                        carry(&mut ep.inventory, &action, &step.observation);
                    }
                    ep.current = Some(step);
                }
                Role::Assistant => {
                    if let (Some(step), Ok(d)) = (ep.current.as_ref(), parse_action(&m.content)) {
                        ep.tried.insert((situation(&step.observation, &ep.inventory), d.action.clone()));
                        pending = Some(d.action);
                    }
                }
                Role::System => {}
            }
        }
        ep
    }
}

#[derive(Debug)]
struct StepPrompt {
    number: usize,
    observation: String,
    valid_actions: Vec<String>,
}

fn step_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?s)Step (\d+):\nObservation: (.*?)\nScore: -?\d+\nValid actions: ([^\n]*)").expect("valid regex")
    })
}

/// The last step block of a user message.
fn parse_step(text: &str) -> Option<StepPrompt> {
    let c = step_re().captures_iter(text).last()?;
    let valid = c[3].split(", ").map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect();
    Some(StepPrompt { number: c[1].parse().ok()?, observation: c[2].to_string(), valid_actions: valid })
}

/// Text after `header` up to the first of `ends` (or the end).
fn section_of<'a>(text: &'a str, header: &str, ends: &[&str]) -> &'a str {
    let Some(start) = text.find(header) else { return "" };
    let body = &text[start + header.len()..];
    let end = ends.iter().filter_map(|e| body.find(e)).min().unwrap_or(body.len());
    &body[..end]
}

#[derive(Debug, Clone)]
struct ListedStep {
    action: String,
    observation: String,
    score: i64,
    reward: i64,
}

#[derive(Debug, Clone)]
struct Listing {
    peak: i64,
    start: Option<String>,
    steps: Vec<ListedStep>,
}

impl Listing {
    fn died(&self) -> bool {
        self.steps.last().is_some_and(|s| s.observation.contains(DEATH_MARK))
    }

    fn won(&self) -> bool {
        self.steps.last().is_some_and(|s| s.observation.contains(WIN_MARK))
    }
}

fn listing_head_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:Trajectory|Attempt) \d+ \(Peak: (-?\d+), Final: -?\d+\):").expect("valid regex"))
}

/// `  [score] action -> observation (reward: +r)`, reward suffix optional.
fn parse_step_line(line: &str) -> Option<ListedStep> {
    let rest = line.strip_prefix("  [")?;
    let (score, rest) = rest.split_once("] ")?;
    let score = score.parse().ok()?;
    let (action, mut observation) = rest.split_once(" -> ")?;
    let mut reward = 0;
    if let Some(i) = observation.rfind(" (reward: ") {
        let tail = &observation[i + " (reward: ".len()..];
        if let Some(r) = tail.strip_suffix(')').filter(|r| r.starts_with(['+', '-'])).and_then(|r| r.parse().ok()) {
            reward = r;
            observation = &observation[..i];
        }
    }
    Some(ListedStep { action: action.to_string(), observation: observation.to_string(), score, reward })
}

/// Trajectory and attempt listings found anywhere in `text`.
fn parse_listings(text: &str) -> Vec<Listing> {
    let mut out: Vec<Listing> = Vec::new();
    for line in text.lines() {
        if !line.starts_with("  [") && !line.starts_with("  Start: ") {
            if line.starts_with("Trajectory ") || line.starts_with("Attempt ") {
                if let Some(c) = listing_head_re().captures(line) {
                    out.push(Listing { peak: c[1].parse().unwrap_or(0), start: None, steps: Vec::new() });
                }
            }
            continue;
        }
        let Some(t) = out.last_mut() else { continue };
        if let Some(s) = line.strip_prefix("  Start: ") {
            t.start = Some(s.to_string());
        } else if let Some(step) = parse_step_line(line) {
            t.steps.push(step);
        }
    }
    out
}

fn candidate_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?m)^(\d+): \[Score: (-?\d+), Steps: \d+, Visits: \d+\]\n  Observation: (.*)\n  Inventory: (.*)$")
            .expect("valid regex")
    })
}

/// Number of items in an inventory line such as "lamp, sword".
fn items_listed(line: &str) -> usize {
    let line = line.trim().trim_end_matches('.');
    if ["", "none", "nothing", "unknown", "empty"].contains(&line.to_ascii_lowercase().as_str()) {
        return 0;
    }
    line.split(',').filter(|s| !s.trim().is_empty()).count()
}

fn select(prompt: &str) -> String {
    let analysis = section_of(prompt, ANALYSIS_HEADER, &[SEPARATOR]);
    let high: Vec<_> = parse_key_states(analysis).into_iter().filter(|k| k.is_high_potential()).collect();
    let scored: Vec<(usize, i64, usize, String)> = candidate_re()
        .captures_iter(prompt)
        .filter_map(|c| {
            let idx = c[1].parse().ok()?;
            let mut score: i64 = c[2].parse().ok()?;
            if high.iter().any(|k| k.mentions(&c[3])) {
                score += SELECT_BONUS;
            }
            Some((idx, score, items_listed(&c[4]), location_of(&c[3])))
        })
        .collect();
    // ties go to the better equipped, then the later candidate
    let best = scored.iter().max_by_key(|(i, s, items, _)| (*s, *items, *i));
    if prompt.contains("\"score\": <number") {
        let (score, thought) = match best {
            Some((_, s, _, loc)) => (*s, format!("the {loc} scores {s}")),
            None => (0, "no candidate".to_string()),
        };
        return json!({"thought": thought, "score": score}).to_string();
    }
    match best {
        Some((i, s, _, loc)) => json!({"thought": format!("the {loc} has the best outlook ({s})"), "index": i}).to_string(),
        None => json!({"thought": "no candidates listed", "index": 0}).to_string(),
    }
}

fn analyze(prompt: &str) -> String {
    let listings = parse_listings(prompt);
    let mut bottlenecks: BTreeMap<String, i64> = BTreeMap::new();
    let mut stalls: BTreeMap<String, i64> = BTreeMap::new();
    let mut reached: Vec<String> = Vec::new();
    let mut rewarded: Vec<String> = Vec::new();
    for t in &listings {
        for s in &t.steps {
            let loc = location_of(&s.observation);
            if !reached.contains(&loc) {
                reached.push(loc);
            }
            if s.reward > 0 {
                let note = format!("{} (+{})", s.action, s.reward);
                if !rewarded.contains(&note) {
                    rewarded.push(note);
                }
            }
        }
        let Some(last) = t.steps.last() else { continue };
        if t.won() {
            continue;
        }
        let loc = location_of(&last.observation);
        if t.died() {
            let prev = t.steps.len().checked_sub(2).map(|i| location_of(&t.steps[i].observation));
            let desc = match prev {
                Some(p) if p != loc => format!("{loc} (reached from {p}): trajectories end in death here"),
                _ => format!("{loc}: trajectories end in death here"),
            };
            let e = bottlenecks.entry(desc).or_insert(t.peak);
            *e = (*e).max(t.peak);
        } else {
            let e = stalls.entry(format!("{loc}: trajectories stall here")).or_insert(t.peak);
            *e = (*e).max(t.peak);
        }
    }
    let best = listings.iter().map(|t| t.peak).max().unwrap_or(0);
    let tag = |v: i64| format!("[achieved: {v}, potential: {}]", v + POTENTIAL_BONUS);
    let mut out = String::new();
    out.push_str("1. FRONTIER & EXPLORATION STATUS:\n");
    out.push_str(&format!("- Reached: {}\n\n", reached.join(", ")));
    out.push_str("2. GAME CHECKPOINTS & PROGRESS:\n");
    out.push_str(&format!("- Best peak so far: {best}\n\n"));
    out.push_str("3. BOTTLENECKS & CHALLENGES:\n");
    if bottlenecks.is_empty() {
        out.push_str("No deaths observed.\n");
    }
    for (d, v) in &bottlenecks {
        out.push_str(&format!("- {d} {}\n", tag(*v)));
    }
    out.push_str("\n4. REWARD STRUCTURE:\n");
    out.push_str(&format!("- Rewarded actions: {}\n\n", if rewarded.is_empty() { "none".into() } else { rewarded.join(", ") }));
    out.push_str("5. NEXT INVESTIGATION GOALS:\n");
    if stalls.is_empty() {
        out.push_str("No stalled trajectories.\n");
    }
    for (d, v) in &stalls {
        out.push_str(&format!("- {d} {}\n", tag(*v)));
    }
    out
}

/// One action taken from an observed state inside some listing.
#[derive(Debug)]
struct Outcome {
    reward: i64,
    died: bool,
    /// Items picked up earlier in the same listing and still carried.
    carried: BTreeSet<String>,
    later_peak: i64,
    /// Where each carried item was picked up.
    taken_at: BTreeMap<String, String>,
}

fn advantage_line(a: &Advantage) -> String {
    if a.avoid {
        format!("  • avoid \"{}\" → {}", a.action, a.effect)
    } else {
        format!("  • \"{}\" → {}", a.action, a.effect)
    }
}

fn advantage(action: &str, effect: String, avoid: bool) -> Advantage {
    Advantage { action: action.to_string(), effect, score_note: None, avoid }
}

fn reflect_mar(prompt: &str) -> String {
    let previous = parse_w_local(section_of(prompt, W_LOCAL_HEADER, &[FRONTIER_HEADER, ATTEMPTS_HEADER, MAR_TAIL]));
    let listings = parse_listings(prompt);

    // observed state -> action -> outcomes
    let mut by_state: BTreeMap<String, BTreeMap<String, Vec<Outcome>>> = BTreeMap::new();
    for t in &listings {
        let mut carried = BTreeSet::new();
        let mut taken_at: BTreeMap<String, String> = BTreeMap::new();
        let mut pre = t.start.clone();
        for (pos, s) in t.steps.iter().enumerate() {
            if let Some(p) = &pre {
                let later_peak = t.steps[pos..].iter().map(|x| x.score).max().unwrap_or(s.score);
                by_state.entry(state_key(p)).or_default().entry(s.action.clone()).or_default().push(Outcome {
                    reward: s.reward,
                    died: s.observation.contains(DEATH_MARK),
                    carried: carried.clone(),
                    later_peak,
                    taken_at: taken_at.clone(),
                });
                let before = carried.len();
                carry(&mut carried, &s.action, &s.observation);
                if carried.len() > before {
                    if let Some(item) = s.action.strip_prefix("take ") {
                        taken_at.insert(item.trim().to_string(), location_of(p));
                    }
                }
            } else {
                carry(&mut carried, &s.action, &s.observation);
            }
            pre = Some(s.observation.clone());
        }
    }

    // (weight, descriptor, advantage)
    let mut found: Vec<(i64, String, Advantage)> = Vec::new();
    for (key, actions) in &by_state {
        let loc = location_of(key);
        let best_reward = |os: &[Outcome]| os.iter().filter(|o| !o.died).map(|o| o.reward).max();
        let rewards: Vec<(&String, i64)> =
            actions.iter().filter_map(|(a, os)| best_reward(os).map(|r| (a, r))).collect();
        let floor = rewards.iter().map(|(_, r)| *r).min().unwrap_or(0);
        if let Some((a, r)) = rewards.iter().filter(|(_, r)| *r > 0).max_by_key(|(a, r)| (*r, std::cmp::Reverse(*a))) {
            if *r > floor || actions.len() == 1 {
                found.push((*r, loc.clone(), advantage(a, format!("immediate reward (+{r})"), false)));
            }
        }
        for (action, outcomes) in actions {
            let dead: Vec<&Outcome> = outcomes.iter().filter(|o| o.died).collect();
            if dead.is_empty() {
                continue;
            }
            let penalty = dead.iter().map(|o| o.reward).min().unwrap_or(0);
            let explained = outcomes.iter().filter(|o| !o.died).max_by_key(|o| o.later_peak).and_then(|good| {
                let item = good.carried.iter().find(|i| dead.iter().all(|d| !d.carried.contains(*i)))?;
                Some((good, item))
            });
            match explained {
                Some((good, item)) => {
                    let weight = good.later_peak - penalty;
                    found.push((
                        weight,
                        loc.clone(),
                        advantage(action, format!("only safe when carrying the {item} (death otherwise, {penalty})"), false),
                    ));
                    if let Some(origin) = good.taken_at.get(item) {
                        found.push((
                            weight,
                            origin.clone(),
                            advantage(
                                &format!("take {item}"),
                                format!("carrying it lets \"{action}\" in the {loc} succeed (peak {})", good.later_peak),
                                false,
                            ),
                        ));
                    }
                }
                None => found.push((
                    -penalty,
                    loc.clone(),
                    advantage(action, format!("death ({penalty}) while carrying only: {}", carried_text(&dead[0].carried)), true),
                )),
            }
        }
    }

    found.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut entries: Vec<LocalEntry> = Vec::new();
    for (_, desc, adv) in found {
        if let Some(e) = entries.iter_mut().find(|e| e.state_descriptor == desc) {
            if !e.advantages.iter().any(|x| x.action == adv.action && x.effect == adv.effect) {
                e.advantages.push(adv);
            }
            continue;
        }
        if entries.len() < MAX_REFLECT_ENTRIES {
            entries.push(LocalEntry { state_descriptor: desc, advantages: vec![adv] });
        }
    }
    for prev in previous {
        if entries.len() >= MAX_REFLECT_ENTRIES {
            break;
        }
        if !entries.iter().any(|e| e.state_descriptor == prev.state_descriptor) {
            entries.push(prev);
        }
    }

    if entries.is_empty() {
        return "No decision points with diverging outcomes were found across these attempts.".into();
    }
    let mut out = String::new();
    for e in &entries {
        out.push_str(&format!("STATE: {}\n- ADVANTAGES:\n", e.state_descriptor));
        for a in &e.advantages {
            out.push_str(&advantage_line(a));
            out.push('\n');
        }
        out.push('\n');
    }
    out.trim_end().to_string()
}

fn reflexion(prompt: &str) -> String {
    let listings = parse_listings(prompt);
    let Some(t) = listings.last() else {
        return "There was nothing to reflect on.".into();
    };
    let start = t.start.as_deref().map(location_of).unwrap_or_else(|| "start".into());
    let Some(last) = t.steps.last() else {
        return format!("The attempt from the {start} took no actions.");
    };
    let end = location_of(&last.observation);
    let outcome = if t.died() {
        format!("died in the {end} after \"{}\"", last.action)
    } else {
        format!("ended in the {end}")
    };
    format!(
        "Starting from the {start}, the attempt reached a peak score of {} and {outcome}. Next time, avoid repeating that ending and try actions that were not taken in the {end}.",
        t.peak
    )
}
