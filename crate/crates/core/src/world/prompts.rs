use std::fs;
use std::path::Path;

use crate::llm::LlmError;

/// Prompt templates with `{name}` placeholders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptSet {
    pub analyze_frontier: String,
    pub select_state: String,
    pub select_state_score: String,
    pub ige_select: String,
    pub mar: String,
    pub reflexion: String,
    pub act_system: String,
    pub act_user_initial: String,
    pub act_step: String,
}

const FILES: [&str; 9] = [
    "analyze_frontier",
    "select_state",
    "select_state_score",
    "ige_select",
    "mar",
    "reflexion",
    "act_system",
    "act_user_initial",
    "act_step",
];

impl PromptSet {
    pub fn builtin() -> Self {
        PromptSet {
            analyze_frontier: include_str!("../../prompts/analyze_frontier.txt").to_string(),
            select_state: include_str!("../../prompts/select_state.txt").to_string(),
            select_state_score: include_str!("../../prompts/select_state_score.txt").to_string(),
            ige_select: include_str!("../../prompts/ige_select.txt").to_string(),
            mar: include_str!("../../prompts/mar.txt").to_string(),
            reflexion: include_str!("../../prompts/reflexion.txt").to_string(),
            act_system: include_str!("../../prompts/act_system.txt").to_string(),
            act_user_initial: include_str!("../../prompts/act_user_initial.txt").to_string(),
            act_step: include_str!("../../prompts/act_step.txt").to_string(),
        }
    }

    /// Loads `<name>.txt` overrides from `dir`; missing files keep the builtin text.
    pub fn from_dir(dir: &Path) -> Result<Self, LlmError> {
        let mut set = PromptSet::builtin();
        for name in FILES {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                let text = fs::read_to_string(&path)?;
                *set.slot(name) = text;
            }
        }
        Ok(set)
    }

    fn slot(&mut self, name: &str) -> &mut String {
        match name {
            "analyze_frontier" => &mut self.analyze_frontier,
            "select_state" => &mut self.select_state,
            "select_state_score" => &mut self.select_state_score,
            "ige_select" => &mut self.ige_select,
            "mar" => &mut self.mar,
            "reflexion" => &mut self.reflexion,
            "act_system" => &mut self.act_system,
            "act_user_initial" => &mut self.act_user_initial,
            "act_step" => &mut self.act_step,
            _ => unreachable!("unknown prompt {name}"),
        }
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet::builtin()
    }
}

/// Substitutes each `{name}` in `template`. Other braces are left alone, and
/// blank lines left behind by empty blocks are collapsed.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = template.trim_end().to_string();
    for (name, value) in values {
        out = out.replace(&format!("{{{name}}}"), value.trim_end());
    }
    collapse_blank_lines(&out).trim_start_matches('\n').to_string()
}

fn collapse_blank_lines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut blank_run = 0;
    for line in text.split('\n') {
        if line.trim().is_empty() {
            blank_run += 1;
            if blank_run > 1 {
                continue;
            }
        } else {
            blank_run = 0;
        }
        out.push_str(line);
        out.push('\n');
    }
    out.pop();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_replaces_named_placeholders_only() {
        let t = "a {x}\n{\n  \"index\": <number>\n}";
        assert_eq!(fill(t, &[("x", "1")]), "a 1\n{\n  \"index\": <number>\n}");
    }

    #[test]
    fn empty_blocks_leave_single_blank_line() {
        let t = "head\n\n{a}\n\n{b}\n\ntail";
        assert_eq!(fill(t, &[("a", ""), ("b", "B")]), "head\n\nB\n\ntail");
    }

    #[test]
    fn builtin_templates_have_expected_placeholders() {
        let p = PromptSet::builtin();
        assert!(p.analyze_frontier.starts_with("Analyze these successful game trajectories"));
        assert!(p.analyze_frontier.contains("{frontier_block}"));
        assert!(p.select_state.starts_with("=== STRATEGIC GAME ANALYSIS ==="));
        assert!(p.select_state.contains("{archive_block}") && p.select_state.contains("{max_index}"));
        assert!(p.mar.contains("identify KEY STATE ADVANTAGES"));
        for ph in ["{w_local_block}", "{frontier_block}", "{local_block}"] {
            assert!(p.mar.contains(ph), "{ph}");
        }
        assert!(p.act_user_initial.contains("{step_block}"));
        assert!(!p.ige_select.contains("STRATEGIC"));
    }

    #[test]
    fn overrides_from_dir() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("mar.txt"), "custom {local_block}").unwrap();
        let p = PromptSet::from_dir(dir.path()).unwrap();
        assert_eq!(p.mar, "custom {local_block}");
        assert_eq!(p.act_system, PromptSet::builtin().act_system);
    }
}
