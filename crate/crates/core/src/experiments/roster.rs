use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::seeds::{derive_seed, stream};
use crate::gridworld::{Capability, Cell, WorldConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Compliant,
    Defective,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Compliant => "compliant",
            Role::Defective => "defective",
        }
    }
}

/// How many apples an agent can physically take per gather.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapabilityClass {
    /// Capped at the quota when compliant, 5 when defective.
    Standard,
    /// 5 per step regardless of role.
    Strong,
    /// 3, 2, 3, 2, ...
    Weak,
}

impl CapabilityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CapabilityClass::Standard => "standard",
            CapabilityClass::Strong => "strong",
            CapabilityClass::Weak => "weak",
        }
    }
}

pub const DEFECTIVE_CAP: u32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub role: Role,
    pub class: CapabilityClass,
}

impl AgentSpec {
    pub fn capability(&self, quota: u32) -> Capability {
        match (self.class, self.role) {
            (CapabilityClass::Standard, Role::Compliant) => Capability::Fixed { cap: quota },
            (CapabilityClass::Standard, Role::Defective) | (CapabilityClass::Strong, _) => {
                Capability::Fixed { cap: DEFECTIVE_CAP }
            }
            (CapabilityClass::Weak, _) => Capability::Alternating { even: 3, odd: 2 },
        }
    }
}

/// `floor(m · n)`, tolerant of binary rounding just below an integer.
pub fn compliant_count(m: f64, n: usize) -> usize {
    (m * n as f64 + 1e-9).floor() as usize
}

/// Grid layout shared by every run of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: i32,
    pub height: i32,
    pub walls: Vec<Cell>,
    pub trees: usize,
    pub episode_length: u32,
}

impl GridSpec {
    pub fn world(&self, roster: &[AgentSpec], quota: u32) -> WorldConfig {
        WorldConfig {
            width: self.width,
            height: self.height,
            walls: self.walls.clone(),
            trees: self.trees,
            episode_length: self.episode_length,
            capabilities: roster.iter().map(|a| a.capability(quota)).collect(),
        }
    }
}

/// Random assignment of logical roster slots to agent ids. Move conflicts
/// are resolved in id order, so a fixed assignment would bias returns.
pub fn slot_to_id(master: u64, replicate: u64, n: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
        master,
        stream::ROLES,
        replicate,
    )));
    ids
}

/// Places `slots` (in logical order) at their agent ids.
pub fn arrange<T: Clone>(slots: &[T], ids: &[usize]) -> Vec<T> {
    let mut out = slots.to_vec();
    for (slot, &id) in slots.iter().zip(ids) {
        out[id] = slot.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compliant_count_floors() {
        assert_eq!(compliant_count(0.8, 5), 4);
        assert_eq!(compliant_count(0.8, 10), 8);
        assert_eq!(compliant_count(0.7, 10), 7);
        assert_eq!(compliant_count(0.5, 5), 2);
        assert_eq!(compliant_count(1.0, 6), 6);
    }

    #[test]
    fn arrangement_is_a_permutation() {
        let ids = slot_to_id(3, 1, 6);
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
        let placed = arrange(&["a", "b", "c", "d", "e", "f"], &ids);
        for (slot, &id) in ids.iter().enumerate() {
            assert_eq!(placed[id], ["a", "b", "c", "d", "e", "f"][slot]);
        }
        assert_eq!(slot_to_id(3, 1, 6), ids);
    }

    #[test]
    fn capabilities() {
        let s = |role, class| AgentSpec { role, class }.capability(3);
        assert_eq!(s(Role::Compliant, CapabilityClass::Standard), Capability::Fixed { cap: 3 });
        assert_eq!(s(Role::Defective, CapabilityClass::Standard), Capability::Fixed { cap: 5 });
        assert_eq!(s(Role::Compliant, CapabilityClass::Strong), Capability::Fixed { cap: 5 });
        assert_eq!(
            s(Role::Defective, CapabilityClass::Weak),
            Capability::Alternating { even: 3, odd: 2 }
        );
    }
}
