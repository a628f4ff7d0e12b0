use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EnvStepResult, Fingerprint, Trajectory};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub fingerprint: Fingerprint,
    pub observation: String,
    pub inventory: Option<String>,
    pub score: i64,
    pub visits: u64,
    /// Shortest known action sequence from reset reaching this state.
    pub path: Vec<String>,
    pub discovery_step: u64,
}

/// Counts reported by [`StateArchive::update`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveUpdate {
    pub inserted: usize,
    pub revisited: usize,
    pub shortened: usize,
}

/// Fingerprint-keyed store of every non-terminal state discovered so far.
/// Entries are never evicted and keep insertion order.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StateArchive {
    entries: Vec<ArchiveEntry>,
    #[serde(skip)]
    index: HashMap<Fingerprint, usize>,
}

impl StateArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn get(&self, fingerprint: &Fingerprint) -> Option<&ArchiveEntry> {
        self.index.get(fingerprint).map(|&i| &self.entries[i])
    }

    /// Rebuilds the lookup index, e.g. after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.entries.iter().enumerate().map(|(i, e)| (e.fingerprint.clone(), i)).collect();
    }

    /// Records the initial state if it is not known yet.
    pub fn insert_root(&mut self, root: &EnvStepResult) {
        if !self.index.contains_key(&root.fingerprint) {
            self.push_entry(ArchiveEntry {
                fingerprint: root.fingerprint.clone(),
                observation: root.observation.clone(),
                inventory: root.inventory.clone(),
                score: root.score,
                visits: 1,
                path: Vec::new(),
                discovery_step: 0,
            });
        }
    }

    pub(crate) fn push_entry(&mut self, entry: ArchiveEntry) {
        self.index.insert(entry.fingerprint.clone(), self.entries.len());
        self.entries.push(entry);
    }

    /// Folds every state of `traj` into the archive.
    ///
    /// `first_step` is the global exploration-step count just before the
    /// trajectory's first exploration step; it dates newly found states.
    /// Terminal states are skipped since nothing can be explored from them.
    pub fn update(&mut self, root: &EnvStepResult, traj: &Trajectory, first_step: u64) -> ArchiveUpdate {
        let mut stats = ArchiveUpdate::default();
        self.insert_root(root);
        for (t, step) in traj.steps.iter().enumerate() {
            if step.done {
                continue;
            }
            let path_len = t + 1;
            match self.index.get(&step.fingerprint_after) {
                Some(&i) => {
                    let entry = &mut self.entries[i];
                    entry.visits += 1;
                    stats.revisited += 1;
                    if path_len < entry.path.len() {
                        entry.path = traj.steps[..path_len].iter().map(|s| s.action.clone()).collect();
                        stats.shortened += 1;
                    }
                    if step.score_after > entry.score {
                        entry.score = step.score_after;
                    }
                }
                None => {
                    let discovery_step = if t < traj.prefix_len {
                        first_step
                    } else {
                        first_step + (t - traj.prefix_len + 1) as u64
                    };
                    self.push_entry(ArchiveEntry {
                        fingerprint: step.fingerprint_after.clone(),
                        observation: step.observation.clone(),
                        inventory: step.inventory.clone(),
                        score: step.score_after,
                        visits: 1,
                        path: traj.steps[..path_len].iter().map(|s| s.action.clone()).collect(),
                        discovery_step,
                    });
                    stats.inserted += 1;
                }
            }
        }
        stats
    }

    /// Highest-scoring entry, ties broken towards the most recently
    /// discovered one.
    pub fn best_by_score(&self) -> Option<usize> {
        (0..self.entries.len()).max_by_key(|&i| (self.entries[i].score, self.entries[i].discovery_step, i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Step;

    fn root() -> EnvStepResult {
        EnvStepResult {
            observation: "start".into(),
            reward: 0,
            score: 0,
            done: false,
            valid_actions: vec!["a".into()],
            fingerprint: Fingerprint::new("root"),
            inventory: None,
        }
    }

    fn step(action: &str, fp: &str, score: i64) -> Step {
        Step {
            action: action.into(),
            observation: format!("at {fp}"),
            reward: 0,
            score_after: score,
            done: false,
            valid_actions: vec![],
            fingerprint_after: Fingerprint::new(fp),
            inventory: None,
        }
    }

    fn traj(id: u64, prefix: usize, steps: Vec<Step>) -> Trajectory {
        // rewards are irrelevant to archive bookkeeping
        Trajectory::new(id, 0, prefix, steps).unwrap()
    }

    #[test]
    fn all_novel_states_inserted() {
        let mut a = StateArchive::new();
        let t = traj(0, 0, vec![step("n", "A", 0), step("n", "B", 0), step("n", "C", 0)]);
        let stats = a.update(&root(), &t, 0);
        assert_eq!(a.len(), 4);
        assert_eq!(stats.inserted, 3);
        assert_eq!(a.get(&Fingerprint::new("C")).unwrap().path, vec!["n", "n", "n"]);
        assert_eq!(a.get(&Fingerprint::new("C")).unwrap().discovery_step, 3);
    }

    #[test]
    fn longer_revisit_keeps_path() {
        let mut a = StateArchive::new();
        a.update(&root(), &traj(0, 0, vec![step("x", "A", 0)]), 0);
        a.update(&root(), &traj(1, 0, vec![step("y", "B", 0), step("z", "A", 0)]), 1);
        let e = a.get(&Fingerprint::new("A")).unwrap();
        assert_eq!(e.visits, 2);
        assert_eq!(e.path, vec!["x"]);
    }

    #[test]
    fn shorter_revisit_replaces_path() {
        let mut a = StateArchive::new();
        a.update(&root(), &traj(0, 0, vec![step("y", "B", 0), step("z", "A", 0)]), 0);
        let stats = a.update(&root(), &traj(1, 0, vec![step("x", "A", 0)]), 2);
        let e = a.get(&Fingerprint::new("A")).unwrap();
        assert_eq!(e.visits, 2);
        assert_eq!(e.path, vec!["x"]);
        assert_eq!(stats.shortened, 1);
    }

    #[test]
    fn terminal_states_skipped_and_score_raised() {
        let mut a = StateArchive::new();
        let mut dead = step("die", "D", -10);
        dead.done = true;
        a.update(&root(), &traj(0, 0, vec![step("x", "A", 0), dead]), 0);
        assert!(a.get(&Fingerprint::new("D")).is_none());
        a.update(&root(), &traj(1, 0, vec![step("x", "A", 5)]), 2);
        assert_eq!(a.get(&Fingerprint::new("A")).unwrap().score, 5);
    }

    #[test]
    fn prefix_states_dated_at_phase_start() {
        let mut a = StateArchive::new();
        let t = traj(0, 1, vec![step("x", "A", 0), step("y", "B", 0)]);
        a.update(&root(), &t, 40);
        assert_eq!(a.get(&Fingerprint::new("A")).unwrap().discovery_step, 40);
        assert_eq!(a.get(&Fingerprint::new("B")).unwrap().discovery_step, 41);
    }

    #[test]
    fn best_by_score_prefers_recent() {
        let mut a = StateArchive::new();
        a.update(&root(), &traj(0, 0, vec![step("x", "A", 5), step("y", "B", 5), step("z", "C", 1)]), 0);
        assert_eq!(a.entries()[a.best_by_score().unwrap()].fingerprint, Fingerprint::new("B"));
    }
}
