use serde::{Deserialize, Serialize};

use crate::gridworld::Action;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: u32,
    pub action: Action,
    pub raw_reward: u32,
}

/// Append-only per-agent record of actions and raw rewards within an episode.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorTrace {
    pub agent_id: usize,
    entries: Vec<TraceEntry>,
}

impl BehaviorTrace {
    pub fn new(agent_id: usize) -> Self {
        BehaviorTrace {
            agent_id,
            entries: Vec::new(),
        }
    }

    /// Build a trace from bare rewards with consecutive steps and no-op actions.
    pub fn from_rewards(agent_id: usize, rewards: &[u32]) -> Self {
        let mut t = BehaviorTrace::new(agent_id);
        for (step, &r) in rewards.iter().enumerate() {
            t.push(step as u32, Action::NOOP, r);
        }
        t
    }

    /// Panics if `step` does not strictly increase.
    pub fn push(&mut self, step: u32, action: Action, raw_reward: u32) {
        if let Some(last) = self.entries.last() {
            assert!(step > last.step, "trace steps must strictly increase");
        }
        self.entries.push(TraceEntry {
            step,
            action,
            raw_reward,
        });
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn rewards(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.raw_reward).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
