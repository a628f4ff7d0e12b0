//! Text renderings of trajectories, archive candidates and policy context.

use std::sync::OnceLock;

use regex::Regex;

use super::prompts::{fill, PromptSet};
use crate::model::{ArchiveEntry, Frontier, Step, Trajectory};

/// Observations are cut to this many characters inside trajectory listings.
pub const OBS_LIMIT: usize = 200;
pub const SEPARATOR: &str = "==================================================";
pub const W_LOCAL_HEADER: &str = "=== KEY STATE ADVANTAGES ===";
pub const FRONTIER_HEADER: &str = "=== FRONTIER TRAJECTORIES ===";
pub const ATTEMPTS_HEADER: &str = "=== PREVIOUS ATTEMPTS FROM THIS STATE ===";

/// Collapses whitespace so the text fits on one line.
pub fn flatten(text: &str) -> String {
    flatten_limited(text, usize::MAX)
}

fn flatten_limited(text: &str, limit: usize) -> String {
    let mut out = String::with_capacity(text.len().min(limit));
    let mut chars = 0;
    for word in text.split_whitespace() {
        if !out.is_empty() {
            if chars == limit {
                break;
            }
            out.push(' ');
            chars += 1;
        }
        for c in word.chars() {
            if chars == limit {
                return out;
            }
            out.push(c);
            chars += 1;
        }
    }
    out
}

pub fn truncate_chars(text: &str, limit: usize) -> &str {
    match text.char_indices().nth(limit) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

/// The one-line, length-limited form used in trajectory listings.
pub fn listing_text(observation: &str) -> String {
    flatten_limited(observation, OBS_LIMIT)
}

fn location_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"You are in the (\w+)").expect("valid regex"))
}

/// Short location name for an observation: the MiniQuest room name when
/// present, otherwise the first non-empty line.
pub fn location_of(observation: &str) -> String {
    if let Some(c) = location_re().captures(observation) {
        return c[1].to_string();
    }
    observation
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(|l| truncate_chars(l, 60).to_string())
        .unwrap_or_default()
}

/// Key identifying "the same situation" across rendered listings: the listing
/// text from the room description on, dropping action-specific prefixes.
pub fn state_key(observation: &str) -> String {
    let text = listing_text(observation);
    match text.find("You are in the") {
        Some(i) => text[i..].to_string(),
        None => text,
    }
}

fn signed(n: i64) -> String {
    if n >= 0 {
        format!("+{n}")
    } else {
        n.to_string()
    }
}

pub fn render_step_line(step: &Step) -> String {
    let mut line = format!("  [{}] {} -> {}", step.score_after, step.action, listing_text(&step.observation));
    if step.reward != 0 {
        line.push_str(&format!(" (reward: {})", signed(step.reward)));
    }
    line
}

/// All frontier trajectories, best first.
pub fn render_frontier(frontier: &Frontier) -> String {
    let mut out = String::new();
    for (i, t) in frontier.entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("Trajectory {} (Peak: {}, Final: {}):\n", i + 1, t.peak_value, t.final_value));
        for s in &t.steps {
            out.push_str(&render_step_line(s));
            out.push('\n');
        }
    }
    out
}

/// Exploration parts of the phase's attempts, all starting at `start_obs`.
pub fn render_attempts(attempts: &[Trajectory], start_obs: &str) -> String {
    let mut out = String::new();
    for (i, t) in attempts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("Attempt {} (Peak: {}, Final: {}):\n", i + 1, t.peak_value, t.final_value));
        out.push_str(&format!("  Start: {}\n", listing_text(start_obs)));
        for s in t.exploration_steps() {
            out.push_str(&render_step_line(s));
            out.push('\n');
        }
    }
    out
}

/// Numbered candidate list; displayed indices are positions in `entries`.
pub fn render_archive(entries: &[&ArchiveEntry]) -> String {
    let mut out = String::new();
    for (i, e) in entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("{i}: [Score: {}, Steps: {}, Visits: {}]\n", e.score, e.path.len(), e.visits));
        out.push_str(&format!("  Observation: {}\n", listing_text(&e.observation)));
        out.push_str(&format!("  Inventory: {}\n", e.inventory.as_deref().unwrap_or("unknown")));
    }
    out
}

/// `header` followed by `body`, or nothing when the body is empty.
pub fn section(header: &str, body: &str) -> String {
    if body.trim().is_empty() {
        String::new()
    } else {
        format!("{header}\n{}\n", body.trim_end())
    }
}

/// Context preceding the first step of an episode.
pub fn render_act_context(w_local: &str, frontier: &str, attempts: &str) -> String {
    [section(W_LOCAL_HEADER, w_local), section(FRONTIER_HEADER, frontier), section(ATTEMPTS_HEADER, attempts)]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_step_block(prompts: &PromptSet, step_number: usize, observation: &str, score: i64, valid: &[String]) -> String {
    fill(
        &prompts.act_step,
        &[
            ("step_number", &step_number.to_string()),
            ("observation", observation.trim()),
            ("score", &score.to_string()),
            ("valid_actions", &valid.join(", ")),
        ],
    )
}

/// First user message of an episode: context, separator and step 1.
pub fn render_act_initial(prompts: &PromptSet, context: &str, step_block: &str) -> String {
    fill(&prompts.act_user_initial, &[("context_block", context), ("step_block", step_block)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::trajectory::tests::steps_from_rewards;

    #[test]
    fn step_lines_show_signed_nonzero_rewards() {
        let steps = steps_from_rewards(&[5, 0, -10]);
        assert!(render_step_line(&steps[0]).ends_with("(reward: +5)"));
        assert!(!render_step_line(&steps[1]).contains("reward"));
        assert!(render_step_line(&steps[2]).ends_with("(reward: -10)"));
        assert!(render_step_line(&steps[2]).starts_with("  [-5] "));
    }

    #[test]
    fn long_observations_are_cut() {
        let long = "x".repeat(500);
        assert_eq!(listing_text(&long).len(), OBS_LIMIT);
        assert_eq!(listing_text("a\n  b"), "a b");
    }

    proptest::proptest! {
        #[test]
        fn listing_text_is_truncated_flatten(text in "[a-c \\n\\t]{0,400}") {
            let words: Vec<&str> = text.split_whitespace().collect();
            let joined = words.join(" ");
            proptest::prop_assert_eq!(listing_text(&text), truncate_chars(&joined, OBS_LIMIT));
        }
    }

    #[test]
    fn locations_and_keys() {
        assert_eq!(location_of("Taken. You are in the Kitchen. Dusty."), "Kitchen");
        assert_eq!(location_of("\nWest of House\nYou are standing"), "West of House");
        assert_eq!(state_key("Taken. You are in the Kitchen. Dusty."), "You are in the Kitchen. Dusty.");
        assert_eq!(state_key("Dark."), "Dark.");
    }

    #[test]
    fn frontier_rendering_format() {
        let mut f = Frontier::new(5);
        f.insert(Trajectory::new(1, 0, 0, steps_from_rewards(&[5, 10])).unwrap());
        let text = render_frontier(&f);
        assert!(text.starts_with("Trajectory 1 (Peak: 15, Final: 15):\n  [5] "), "{text}");
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn empty_sections_are_dropped() {
        let ctx = render_act_context("", "Trajectory 1 (Peak: 0, Final: 0):", "");
        assert!(ctx.starts_with(FRONTIER_HEADER));
        assert!(!ctx.contains(W_LOCAL_HEADER));
        assert_eq!(render_act_context("", "", ""), "");
    }

    #[test]
    fn initial_prompt_layout() {
        let p = PromptSet::builtin();
        let step = render_step_block(&p, 1, "You are in the Field.", 0, &["north".into(), "look".into()]);
        assert_eq!(step, "Step 1:\nObservation: You are in the Field.\nScore: 0\nValid actions: north, look\n\nWhat is your next move?");
        let first = render_act_initial(&p, "", &step);
        assert!(first.starts_with(SEPARATOR), "{first}");
    }
}
