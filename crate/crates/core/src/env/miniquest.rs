use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EnvError, Environment, UNKNOWN_COMMAND};
use crate::model::{EnvStepResult, Fingerprint};

/// The versioned MiniQuest room/item/reward table.
pub const MINIQUEST_JSON: &str = include_str!("../../data/miniquest.json");

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MiniQuestData {
    pub version: u32,
    pub title: String,
    pub start_room: String,
    pub winning_room: String,
    pub max_score: i64,
    pub death_penalty: i64,
    pub rooms: Vec<RoomDef>,
    pub exits: Vec<ExitDef>,
    pub items: Vec<ItemDef>,
    pub commands: Vec<CommandDef>,
    pub entry_rules: Vec<EntryRule>,
    pub entry_rewards: Vec<EntryReward>,
    pub flag_notes: Vec<FlagNote>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoomDef {
    pub name: String,
    pub description: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExitDef {
    pub from: String,
    pub verb: String,
    pub to: String,
    #[serde(default)]
    pub requires_flag: Option<String>,
    #[serde(default)]
    pub requires_item: Option<String>,
    #[serde(default)]
    pub blocked: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ItemDef {
    pub name: String,
    pub start_room: Option<String>,
    pub take_reward: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommandDef {
    pub room: String,
    pub command: String,
    #[serde(default)]
    pub unless_flag: Option<String>,
    #[serde(default)]
    pub set_flag: Option<String>,
    #[serde(default)]
    pub give_item: Option<String>,
    pub message: String,
}

/// Condition checked whenever the player enters `room`; failing it is fatal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntryRule {
    pub room: String,
    pub requires_item: String,
    #[serde(default)]
    pub unless_flag: Option<String>,
    pub death_message: String,
    #[serde(default)]
    pub pass_flag: Option<String>,
    #[serde(default)]
    pub pass_message: Option<String>,
}

/// Reward granted the first time the player enters `room`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntryReward {
    pub room: String,
    pub reward: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlagNote {
    pub flag: String,
    pub room: String,
    pub text: String,
}

impl MiniQuestData {
    pub fn builtin() -> Self {
        serde_json::from_str(MINIQUEST_JSON).expect("embedded MiniQuest table is valid")
    }

    fn description(&self, room: &str) -> &str {
        self.rooms.iter().find(|r| r.name == room).map(|r| r.description.as_str()).unwrap_or("")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Playing,
    Dead,
    Won,
}

/// Complete MiniQuest world state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuestState {
    pub room: String,
    pub inventory: BTreeSet<String>,
    /// Location of every item lying on a floor.
    pub floor: BTreeMap<String, String>,
    pub flags: BTreeSet<String>,
    pub score: i64,
    pub status: Status,
}

impl QuestState {
    pub fn is_done(&self) -> bool {
        self.status != Status::Playing
    }

    /// Canonical serialization hashed into the state fingerprint.
    pub fn canonical(&self) -> String {
        let inv: Vec<&str> = self.inventory.iter().map(String::as_str).collect();
        let floor: Vec<String> = self.floor.iter().map(|(i, r)| format!("{i}@{r}")).collect();
        let flags: Vec<&str> = self.flags.iter().map(String::as_str).collect();
        format!(
            "room={};inv={};floor={};flags={};score={};status={:?}",
            self.room,
            inv.join(","),
            floor.join(","),
            flags.join(","),
            self.score,
            self.status
        )
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::of_bytes(self.canonical().as_bytes())
    }

    pub fn inventory_text(&self) -> String {
        if self.inventory.is_empty() {
            "nothing".to_string()
        } else {
            self.inventory.iter().cloned().collect::<Vec<_>>().join(", ")
        }
    }
}

/// A small deterministic text adventure: fetch the lamp and the sword, open
/// the trapdoor, get past the troll and unlock the vault. Max score 100.
#[derive(Clone, Debug)]
pub struct MiniQuest {
    data: Arc<MiniQuestData>,
    state: Option<QuestState>,
}

impl Default for MiniQuest {
    fn default() -> Self {
        Self::new()
    }
}

fn normalize(action: &str) -> String {
    let words: Vec<&str> = action.split_whitespace().collect();
    let mut s = words.join(" ").to_lowercase();
    if let Some(rest) = s.strip_prefix("go ") {
        s = rest.to_string();
    }
    s
}

impl MiniQuest {
    pub fn new() -> Self {
        Self::from_data(MiniQuestData::builtin())
    }

    pub fn from_data(data: MiniQuestData) -> Self {
        MiniQuest { data: Arc::new(data), state: None }
    }

    pub fn data(&self) -> &MiniQuestData {
        &self.data
    }

    pub fn state(&self) -> Option<&QuestState> {
        self.state.as_ref()
    }

    pub fn initial_state(&self) -> QuestState {
        let floor = self
            .data
            .items
            .iter()
            .filter_map(|i| i.start_room.as_ref().map(|r| (i.name.clone(), r.clone())))
            .collect();
        QuestState {
            room: self.data.start_room.clone(),
            inventory: BTreeSet::new(),
            floor,
            flags: BTreeSet::new(),
            score: 0,
            status: Status::Playing,
        }
    }

    /// Commands offered in `state`: exits, item verbs, room commands, `look`.
    pub fn valid_actions(&self, state: &QuestState) -> Vec<String> {
        if state.is_done() {
            return Vec::new();
        }
        let d = &self.data;
        let mut out: Vec<String> =
            d.exits.iter().filter(|e| e.from == state.room).map(|e| e.verb.clone()).collect();
        for item in &d.items {
            if state.floor.get(&item.name) == Some(&state.room) {
                out.push(format!("take {}", item.name));
            }
        }
        for item in &d.items {
            if state.inventory.contains(&item.name) {
                out.push(format!("drop {}", item.name));
            }
        }
        for c in &d.commands {
            if c.room == state.room && !c.unless_flag.as_ref().is_some_and(|f| state.flags.contains(f)) {
                out.push(c.command.clone());
            }
        }
        out.push("look".to_string());
        out
    }

    fn room_view(&self, state: &QuestState) -> String {
        let mut s = format!("You are in the {}. {}", state.room, self.data.description(&state.room));
        for note in &self.data.flag_notes {
            if note.room == state.room && state.flags.contains(&note.flag) {
                s.push(' ');
                s.push_str(&note.text);
            }
        }
        let here: Vec<&str> = self
            .data
            .items
            .iter()
            .filter(|i| state.floor.get(&i.name) == Some(&state.room))
            .map(|i| i.name.as_str())
            .collect();
        if !here.is_empty() {
            s.push_str(&format!(" You see: {}.", here.join(", ")));
        }
        s
    }

    fn result(&self, state: &QuestState, observation: String, reward: i64) -> EnvStepResult {
        EnvStepResult {
            observation,
            reward,
            score: state.score,
            done: state.is_done(),
            valid_actions: self.valid_actions(state),
            fingerprint: state.fingerprint(),
            inventory: Some(state.inventory_text()),
        }
    }

    pub fn observe(&self, state: &QuestState) -> EnvStepResult {
        self.result(state, self.room_view(state), 0)
    }

    fn enter(&self, state: &mut QuestState, room: &str) -> (String, i64) {
        let d = &self.data;
        state.room = room.to_string();
        let mut notes = Vec::new();
        for rule in d.entry_rules.iter().filter(|r| r.room == room) {
            if rule.unless_flag.as_ref().is_some_and(|f| state.flags.contains(f)) {
                continue;
            }
            if !state.inventory.contains(&rule.requires_item) {
                state.status = Status::Dead;
                state.score += d.death_penalty;
                let obs = format!("You are in the {room}. {} *** You have died ***", rule.death_message);
                return (obs, d.death_penalty);
            }
            if let Some(flag) = &rule.pass_flag {
                state.flags.insert(flag.clone());
            }
            if let Some(msg) = &rule.pass_message {
                notes.push(msg.clone());
            }
        }
        let mut reward = 0;
        for r in d.entry_rewards.iter().filter(|r| r.room == room) {
            if state.flags.insert(format!("scored:{room}")) {
                reward += r.reward;
            }
        }
        state.score += reward;
        if room == d.winning_room {
            state.status = Status::Won;
            notes.push("*** You have won ***".to_string());
        }
        let mut obs = self.room_view(state);
        for n in notes {
            obs.push(' ');
            obs.push_str(&n);
        }
        (obs, reward)
    }

    /// Pure transition function: applies `action` to `state`.
    pub fn transition(&self, state: &QuestState, action: &str) -> (QuestState, String, i64) {
        let d = &self.data;
        let cmd = normalize(action);
        let mut next = state.clone();

        if cmd == "look" {
            return (next, self.room_view(state), 0);
        }
        if let Some(exit) = d.exits.iter().find(|e| e.from == state.room && e.verb == cmd) {
            let open = exit.requires_flag.as_ref().is_none_or(|f| state.flags.contains(f))
                && exit.requires_item.as_ref().is_none_or(|i| state.inventory.contains(i));
            if !open {
                let msg = exit.blocked.clone().unwrap_or_else(|| "You can't go that way.".into());
                return (next, format!("{msg} {}", self.room_view(state)), 0);
            }
            let (obs, reward) = self.enter(&mut next, &exit.to);
            return (next, obs, reward);
        }
        if let Some(c) = d.commands.iter().find(|c| c.room == state.room && c.command == cmd) {
            if c.unless_flag.as_ref().is_some_and(|f| state.flags.contains(f)) {
                return (next, format!("Nothing happens. {}", self.room_view(state)), 0);
            }
            if let Some(f) = &c.set_flag {
                next.flags.insert(f.clone());
            }
            if let Some(item) = &c.give_item {
                next.floor.remove(item);
                next.inventory.insert(item.clone());
            }
            return (next.clone(), format!("{} {}", c.message, self.room_view(&next)), 0);
        }
        if let Some(name) = cmd.strip_prefix("take ") {
            if let Some(item) = d.items.iter().find(|i| i.name == name) {
                if state.floor.get(name) != Some(&state.room) {
                    return (next, format!("You can't see any {name} here. {}", self.room_view(state)), 0);
                }
                next.floor.remove(name);
                next.inventory.insert(name.to_string());
                let mut reward = 0;
                if item.take_reward != 0 && next.flags.insert(format!("scored:take:{name}")) {
                    reward = item.take_reward;
                    next.score += reward;
                }
                return (next.clone(), format!("Taken. {}", self.room_view(&next)), reward);
            }
        }
        if let Some(name) = cmd.strip_prefix("drop ") {
            if d.items.iter().any(|i| i.name == name) {
                if !next.inventory.remove(name) {
                    return (next, format!("You aren't carrying any {name}. {}", self.room_view(state)), 0);
                }
                next.floor.insert(name.to_string(), state.room.clone());
                return (next.clone(), format!("Dropped. {}", self.room_view(&next)), 0);
            }
        }
        if ["north", "south", "east", "west", "up", "down", "enter", "out"].contains(&cmd.as_str()) {
            return (next, format!("You can't go that way. {}", self.room_view(state)), 0);
        }
        (next, UNKNOWN_COMMAND.to_string(), 0)
    }
}

impl Environment for MiniQuest {
    fn name(&self) -> String {
        "miniquest".to_string()
    }

    fn reset(&mut self, _seed: u64) -> Result<EnvStepResult, EnvError> {
        let s = self.initial_state();
        let r = self.observe(&s);
        self.state = Some(s);
        Ok(r)
    }

    fn step(&mut self, action: &str) -> Result<EnvStepResult, EnvError> {
        let state = self.state.as_ref().ok_or_else(|| EnvError::Protocol("step before reset".into()))?;
        if state.is_done() {
            return Err(EnvError::Protocol("step after episode end".into()));
        }
        let (next, obs, reward) = self.transition(state, action);
        let r = self.result(&next, obs, reward);
        self.state = Some(next);
        Ok(r)
    }

    fn fingerprint(&mut self) -> Result<Fingerprint, EnvError> {
        self.state
            .as_ref()
            .map(QuestState::fingerprint)
            .ok_or_else(|| EnvError::Protocol("fingerprint before reset".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn play(env: &mut MiniQuest, actions: &[&str]) -> EnvStepResult {
        let mut last = env.reset(0).unwrap();
        for a in actions {
            last = env.step(a).unwrap();
        }
        last
    }

    #[test]
    fn reset_starts_in_field() {
        let mut env = MiniQuest::new();
        let r = env.reset(7).unwrap();
        assert!(r.observation.starts_with("You are in the Field"));
        assert_eq!(r.score, 0);
        assert!(!r.done);
        assert!(r.valid_actions.contains(&"look".to_string()));
        let again = env.reset(7).unwrap();
        assert_eq!(r.fingerprint, again.fingerprint);
    }

    #[test]
    fn go_north_reaches_path() {
        let mut env = MiniQuest::new();
        let r = play(&mut env, &["go north"]);
        assert!(r.observation.starts_with("You are in the Path"));
        assert_eq!(r.reward, 0);
    }

    #[test]
    fn take_lamp_scores_five_once() {
        let mut env = MiniQuest::new();
        let r = play(&mut env, &["north", "north", "enter", "take lamp"]);
        assert_eq!((r.reward, r.score), (5, 5));
        let r = env.step("drop lamp").unwrap();
        assert_eq!(r.score, 5);
        let r = env.step("take lamp").unwrap();
        assert_eq!((r.reward, r.score), (0, 5));
    }

    #[test]
    fn unknown_command() {
        let mut env = MiniQuest::new();
        let r = play(&mut env, &["xyzzy"]);
        assert_eq!(r.observation, UNKNOWN_COMMAND);
        assert_eq!(r.reward, 0);
        assert!(!r.done);
    }

    #[test]
    fn dark_cellar_kills() {
        let mut env = MiniQuest::new();
        let r = play(&mut env, &["north", "north", "enter", "open trapdoor", "down"]);
        assert!(r.done);
        assert_eq!((r.reward, r.score), (-10, -10));
        assert!(r.valid_actions.is_empty());
        assert!(matches!(env.step("up"), Err(EnvError::Protocol(_))));
    }

    #[test]
    fn troll_without_sword_kills() {
        let mut env = MiniQuest::new();
        let r = play(&mut env, &["north", "north", "enter", "take lamp", "open trapdoor", "down", "west"]);
        assert!(r.done);
        assert!(r.observation.contains("TrollRoom"));
        assert_eq!(r.score, 5);
    }

    #[test]
    fn critical_path_scores_100() {
        let mut env = MiniQuest::new();
        let path = [
            "north", "north", "enter", "take lamp", "up", "take sword", "down", "open trapdoor", "down",
            "west", "west", "unlock vault", "north",
        ];
        let r = play(&mut env, &path);
        assert!(r.done);
        assert_eq!(r.score, 100);
        assert!(r.observation.contains("You have won"));
    }

    #[test]
    fn fingerprint_tracks_inventory() {
        let env = MiniQuest::new();
        let s = env.initial_state();
        let mut t = s.clone();
        assert_eq!(s.fingerprint(), t.fingerprint());
        t.inventory.insert("sword".into());
        assert_ne!(s.fingerprint(), t.fingerprint());
    }

    #[test]
    fn initial_digest_is_pinned() {
        // canonical serialization then SHA-256; must not drift between builds
        let env = MiniQuest::new();
        let s = env.initial_state();
        assert_eq!(s.canonical(), "room=Field;inv=;floor=lamp@Kitchen,sword@Attic;flags=;score=0;status=Playing");
        assert_eq!(s.fingerprint(), Fingerprint::of_bytes(s.canonical().as_bytes()));
    }

    #[test]
    fn blocked_exits_explain_themselves() {
        let mut env = MiniQuest::new();
        let r = play(&mut env, &["north", "north", "enter", "down"]);
        assert!(r.observation.starts_with("The trapdoor is closed."));
        assert!(!r.done);
    }
}
