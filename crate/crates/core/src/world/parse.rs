use std::sync::OnceLock;

use regex::Regex;

use super::{Advantage, KeyState, KeyStateKind, LocalEntry};

/// Upper bound on parsed W_local entries.
pub const MAX_LOCAL_ENTRIES: usize = 8;

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[#*\s]*(\d+)\.\s*\**\s*([A-Z][A-Z &/\-]{2,})").expect("valid regex"))
}

fn tag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\[\s*achieved:\s*(-?\d+(?:\.\d+)?|[a-z?]+)\s*,\s*potential:\s*(-?\d+(?:\.\d+)?|[a-z?]+)\s*\]")
            .expect("valid regex")
    })
}

fn quoted_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#""([^"]+)"|“([^”]+)”"#).expect("valid regex"))
}

fn score_note_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\(([^()]*\d[^()]*)\)\s*$").expect("valid regex"))
}

/// Removes markdown emphasis and surrounding whitespace.
fn clean(line: &str) -> String {
    line.replace("**", "").replace("__", "").trim().to_string()
}

/// Text of a bullet line without its marker, or None for non-bullets.
fn bullet(line: &str) -> Option<&str> {
    let t = line.trim_start();
    for marker in ["- ", "• ", "* ", "+ "] {
        if let Some(rest) = t.strip_prefix(marker) {
            return Some(rest.trim());
        }
    }
    None
}

fn is_separator(line: &str) -> bool {
    let t = line.trim();
    t.len() >= 3 && t.chars().all(|c| c == '=' || c == '-' || c == '─')
}

fn number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Key states listed under the bottleneck and next-goal sections of a
/// frontier analysis. Optional `[achieved: N, potential: M]` tags become
/// numeric values; everything else is best effort.
pub fn parse_key_states(text: &str) -> Vec<KeyState> {
    let mut out = Vec::new();
    let mut kind: Option<KeyStateKind> = None;
    for raw in text.lines() {
        let line = clean(raw);
        if let Some(c) = header_re().captures(&line) {
            if bullet(raw).is_none() && !line.starts_with('[') {
                let title = c[2].to_ascii_uppercase();
                kind = if title.contains("BOTTLENECK") {
                    Some(KeyStateKind::Bottleneck)
                } else if title.contains("NEXT INVESTIGATION") || title.contains("GOAL") {
                    Some(KeyStateKind::Goal)
                } else {
                    None
                };
                continue;
            }
        }
        let Some(kind) = kind else { continue };
        let Some(item) = bullet(&line) else { continue };
        let (descriptor, achieved, potential) = match tag_re().captures(item) {
            Some(c) => {
                let desc = tag_re().replace(item, "").trim().to_string();
                (desc, number(&c[1]), number(&c[2]))
            }
            None => (item.to_string(), None, None),
        };
        if descriptor.is_empty() {
            continue;
        }
        out.push(KeyState { descriptor, kind, achieved_value: achieved, potential_value: potential });
    }
    out
}

fn parse_advantage(item: &str) -> Advantage {
    let (left, right) = match item.split_once('→').or_else(|| item.split_once("->")) {
        Some((l, r)) => (l.trim(), r.trim()),
        None => (item.trim(), ""),
    };
    let avoid = left.to_ascii_lowercase().starts_with("avoid");
    let action = match quoted_re().captures(left) {
        Some(c) => c.get(1).or_else(|| c.get(2)).map(|m| m.as_str().trim().to_string()).unwrap_or_default(),
        None => {
            let l = if avoid { left[5..].trim() } else { left };
            l.trim_matches('"').to_string()
        }
    };
    let score_note = score_note_re().captures(right).map(|c| c[1].trim().to_string());
    Advantage { action, effect: right.to_string(), score_note, avoid }
}

/// STATE / ADVANTAGES blocks of a reflection. An entry ends at a separator
/// line or the next STATE line; at most [`MAX_LOCAL_ENTRIES`] are kept.
pub fn parse_w_local(text: &str) -> Vec<LocalEntry> {
    let mut entries: Vec<LocalEntry> = Vec::new();
    let mut open = false;
    for raw in text.lines() {
        let line = clean(raw);
        let unbulleted = bullet(&line).unwrap_or(&line).trim_start_matches('#').trim();
        if let Some(rest) = unbulleted.strip_prefix("STATE:") {
            let descriptor = clean(rest).trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if entries.len() >= MAX_LOCAL_ENTRIES {
                break;
            }
            entries.push(LocalEntry { state_descriptor: descriptor, advantages: Vec::new() });
            open = true;
            continue;
        }
        if is_separator(&line) {
            open = false;
            continue;
        }
        if !open {
            continue;
        }
        let Some(item) = bullet(&line) else { continue };
        if item.to_ascii_uppercase().starts_with("ADVANTAGES") {
            continue;
        }
        if let Some(entry) = entries.last_mut() {
            entry.advantages.push(parse_advantage(item));
        }
    }
    entries
}
