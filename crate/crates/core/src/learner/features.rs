use serde::{Deserialize, Serialize};

use crate::gridworld::{Cell, Observation, RECENT_WINDOW};

/// One discretised aspect of an observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Component {
    /// Offset to the nearest tree, clamped per axis to `radius`.
    NearestTree { radius: i32 },
    /// Offset to the nearest other agent currently flagged Defective.
    NearestFlagged { radius: i32 },
    /// Offset to the tree closest to the nearest flagged agent.
    FlaggedTree { radius: i32 },
    /// Own last three raw rewards, each bucketed as 0, 1-2 or 3+.
    RecentRewards,
}

const REWARD_BUCKETS: usize = 3;

impl Component {
    pub fn cardinality(&self) -> usize {
        match *self {
            Component::NearestTree { radius }
            | Component::NearestFlagged { radius }
            | Component::FlaggedTree { radius } => offset_states(radius) + 1,
            Component::RecentRewards => REWARD_BUCKETS.pow(RECENT_WINDOW as u32),
        }
    }

    pub fn value(&self, obs: &Observation) -> usize {
        let none = self.cardinality() - 1;
        match *self {
            Component::NearestTree { radius } => {
                nearest(obs.position, obs.tree_positions.iter().copied())
                    .map_or(none, |c| clamped_offset(obs.position, c, radius))
            }
            Component::NearestFlagged { radius } => nearest_flagged(obs)
                .map_or(none, |c| clamped_offset(obs.position, c, radius)),
            Component::FlaggedTree { radius } => nearest_flagged(obs)
                .and_then(|f| nearest(f, obs.tree_positions.iter().copied()))
                .map_or(none, |c| clamped_offset(obs.position, c, radius)),
            Component::RecentRewards => obs.recent_rewards.iter().fold(0, |acc, &r| {
                let b = match r {
                    0 => 0,
                    1..=2 => 1,
                    _ => 2,
                };
                acc * REWARD_BUCKETS + b
            }),
        }
    }
}

/// A conjunction of components, indexed in mixed radix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureGroup(pub Vec<Component>);

impl FeatureGroup {
    pub fn cardinality(&self) -> usize {
        self.0.iter().map(Component::cardinality).product()
    }

    pub fn index(&self, obs: &Observation) -> usize {
        self.0
            .iter()
            .fold(0, |acc, c| acc * c.cardinality() + c.value(obs))
    }
}

/// Maps an observation to one active index per feature group. A single group
/// gives a plain lookup table; several groups give a linear model over binary
/// features whose values are summed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub groups: Vec<FeatureGroup>,
}

impl FeatureEncoder {
    pub fn tabular(components: Vec<Component>) -> Self {
        FeatureEncoder {
            groups: vec![FeatureGroup(components)],
        }
    }

    /// Offsets start at each group's first row in a shared weight table.
    pub fn group_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.groups.len());
        let mut acc = 0;
        for g in &self.groups {
            offsets.push(acc);
            acc += g.cardinality();
        }
        offsets
    }

    pub fn row_count(&self) -> usize {
        self.groups.iter().map(FeatureGroup::cardinality).sum()
    }

    /// Global row index of the active feature in each group.
    pub fn encode(&self, obs: &Observation) -> Vec<usize> {
        self.groups
            .iter()
            .zip(self.group_offsets())
            .map(|(g, off)| off + g.index(obs))
            .collect()
    }
}

impl Default for FeatureEncoder {
    fn default() -> Self {
        let tree = Component::NearestTree { radius: 3 };
        FeatureEncoder {
            groups: vec![FeatureGroup(vec![tree])],
        }
    }
}

fn offset_states(radius: i32) -> usize {
    let side = (2 * radius + 1) as usize;
    side * side
}

fn nearest_flagged(obs: &Observation) -> Option<Cell> {
    let others = obs
        .agent_positions
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != obs.agent_id && obs.flagged.get(j).copied().unwrap_or(false))
        .map(|(_, &c)| c);
    nearest(obs.position, others)
}

/// Closest cell by squared distance; ties go to the earliest.
fn nearest(from: Cell, cells: impl Iterator<Item = Cell>) -> Option<Cell> {
    cells.min_by_key(|c| {
        let (dx, dy) = (c.x - from.x, c.y - from.y);
        dx * dx + dy * dy
    })
}

fn clamped_offset(from: Cell, to: Cell, radius: i32) -> usize {
    let side = 2 * radius + 1;
    let dx = (to.x - from.x).clamp(-radius, radius) + radius;
    let dy = (to.y - from.y).clamp(-radius, radius) + radius;
    (dy * side + dx) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{Capability, GridWorld, WorldConfig};

    fn world() -> GridWorld {
        let cfg = WorldConfig {
            width: 12,
            height: 12,
            walls: vec![],
            trees: 4,
            episode_length: 10,
            capabilities: vec![Capability::Fixed { cap: 3 }; 4],
        };
        GridWorld::new(&cfg, 5).unwrap()
    }

    fn all_components() -> Vec<Component> {
        vec![
            Component::NearestTree { radius: 2 },
            Component::NearestFlagged { radius: 1 },
            Component::FlaggedTree { radius: 2 },
            Component::RecentRewards,
        ]
    }

    #[test]
    fn indices_stay_in_range() {
        let mut w = world();
        w.set_public_flags(&[false, true, false, true]).unwrap();
        let enc = FeatureEncoder {
            groups: vec![
                FeatureGroup(vec![Component::NearestTree { radius: 3 }]),
                FeatureGroup(all_components()),
            ],
        };
        assert_eq!(enc.row_count(), 50 + 26 * 10 * 26 * 27);
        for a in 0..4 {
            let idx = enc.encode(&w.observe(a).unwrap());
            assert_eq!(idx.len(), 2);
            assert!(idx[0] < 50);
            assert!(idx[1] >= 50 && idx[1] < enc.row_count());
        }
    }

    #[test]
    fn flagged_components_ignore_self() {
        let mut w = world();
        let c = Component::NearestFlagged { radius: 2 };
        let none = c.cardinality() - 1;
        w.set_public_flags(&[false, true, false, false]).unwrap();
        assert_eq!(c.value(&w.observe(1).unwrap()), none);
        assert_ne!(c.value(&w.observe(0).unwrap()), none);
    }

    #[test]
    fn nearest_tree_offset() {
        let w = world();
        let obs = w.observe(0).unwrap();
        let c = Component::NearestTree { radius: 20 };
        let v = c.value(&obs);
        let side = 41;
        let (dx, dy) = ((v % side) as i32 - 20, (v / side) as i32 - 20);
        let target = obs.position.offset(dx, dy);
        let best = obs
            .tree_positions
            .iter()
            .map(|t| (t.x - obs.position.x).pow(2) + (t.y - obs.position.y).pow(2))
            .min()
            .unwrap();
        assert!(obs.tree_positions.contains(&target));
        assert_eq!((dx * dx + dy * dy), best);
    }
}
