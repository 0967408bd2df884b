use super::action::{Action, ACTION_COUNT};
use super::world::{Cell, GridWorld, RECENT_WINDOW};
use super::WorldError;

/// Radius of the circular local view.
pub const VIEW_RANGE: i32 = 2;
/// Side of each spatial channel: `2 * VIEW_RANGE + 1`.
pub const VIEW_SIDE: usize = (2 * VIEW_RANGE + 1) as usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    OtherAgents = 0,
    Walls = 1,
    Trees = 2,
}

pub const CHANNELS: usize = 3;

/// Local `CHANNELS x 5 x 5` view centred on the agent, masked to the view
/// circle. Out-of-bounds cells count as walls.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialView {
    data: [f32; CHANNELS * VIEW_SIDE * VIEW_SIDE],
}

impl SpatialView {
    /// Value at view offset `(dx, dy)` from the centre.
    pub fn get(&self, channel: Channel, dx: i32, dy: i32) -> f32 {
        self.data[Self::index(channel, dx, dy)]
    }

    pub fn channel(&self, channel: Channel) -> &[f32] {
        let n = VIEW_SIDE * VIEW_SIDE;
        &self.data[channel as usize * n..(channel as usize + 1) * n]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn in_view(dx: i32, dy: i32) -> bool {
        dx * dx + dy * dy <= VIEW_RANGE * VIEW_RANGE
    }

    fn index(channel: Channel, dx: i32, dy: i32) -> usize {
        let row = (dy + VIEW_RANGE) as usize;
        let col = (dx + VIEW_RANGE) as usize;
        channel as usize * VIEW_SIDE * VIEW_SIDE + row * VIEW_SIDE + col
    }
}

/// What one agent perceives at a step.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub agent_id: usize,
    pub position: Cell,
    pub width: i32,
    pub height: i32,
    pub last_action: Option<Action>,
    pub last_reward: u32,
    /// Own raw rewards over the last steps, most recent first.
    pub recent_rewards: [u32; RECENT_WINDOW],
    pub agent_positions: Vec<Cell>,
    pub tree_positions: Vec<Cell>,
    /// Current public detector verdicts, indexed by agent id.
    pub flagged: Vec<bool>,
    pub spatial: SpatialView,
}

impl Observation {
    /// Flat non-spatial features: last-action one-hot, last reward, all agent
    /// positions, all tree positions, own normalised position, public flags.
    /// Positions are divided by the grid side.
    pub fn nonspatial(&self) -> Vec<f32> {
        let mut v = vec![0.0f32; ACTION_COUNT];
        if let Some(a) = self.last_action {
            v[a.index()] = 1.0;
        }
        v.push(self.last_reward as f32);
        let (w, h) = (self.width as f32, self.height as f32);
        for c in self.agent_positions.iter().chain(&self.tree_positions) {
            v.push(c.x as f32 / w);
            v.push(c.y as f32 / h);
        }
        v.push(self.position.x as f32 / w);
        v.push(self.position.y as f32 / h);
        v.extend(self.flagged.iter().map(|&f| f as u8 as f32));
        v
    }
}

impl GridWorld {
    pub fn observe(&self, agent_id: usize) -> Result<Observation, WorldError> {
        let me = self.agent(agent_id)?;
        let mut data = [0.0f32; CHANNELS * VIEW_SIDE * VIEW_SIDE];
        for dy in -VIEW_RANGE..=VIEW_RANGE {
            for dx in -VIEW_RANGE..=VIEW_RANGE {
                if !SpatialView::in_view(dx, dy) {
                    continue;
                }
                let c = me.position.offset(dx, dy);
                if !self.in_bounds(c) || self.is_wall(c) {
                    data[SpatialView::index(Channel::Walls, dx, dy)] = 1.0;
                    continue;
                }
                if matches!(self.agent_at(c), Some(a) if a != agent_id) {
                    data[SpatialView::index(Channel::OtherAgents, dx, dy)] = 1.0;
                }
                if self.tree_at(c).is_some() {
                    data[SpatialView::index(Channel::Trees, dx, dy)] = 1.0;
                }
            }
        }
        Ok(Observation {
            agent_id,
            position: me.position,
            width: self.width(),
            height: self.height(),
            last_action: me.last_action,
            last_reward: me.last_reward,
            recent_rewards: me.recent_rewards,
            agent_positions: self.agents().iter().map(|a| a.position).collect(),
            tree_positions: self.trees().iter().map(|t| t.position).collect(),
            flagged: self.public_flags().to_vec(),
            spatial: SpatialView { data },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::world::tests::scripted;
    use super::*;

    #[test]
    fn lone_agent_sees_no_agents() {
        let w = scripted(20, 20, &[(Cell::new(10, 10), 3)], &[], &[]);
        let obs = w.observe(0).unwrap();
        assert!(obs.spatial.channel(Channel::OtherAgents).iter().all(|&v| v == 0.0));
        assert!(obs.spatial.channel(Channel::Walls).iter().all(|&v| v == 0.0));
        assert_eq!(obs.spatial.as_slice().len(), 75);
    }

    #[test]
    fn single_tree_lands_at_its_offset() {
        let w = scripted(20, 20, &[(Cell::new(10, 10), 3)], &[Cell::new(11, 10)], &[]);
        let obs = w.observe(0).unwrap();
        let trees = obs.spatial.channel(Channel::Trees);
        assert_eq!(trees.iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(obs.spatial.get(Channel::Trees, 1, 0), 1.0);
    }

    #[test]
    fn corners_outside_view_circle_are_masked() {
        let w = scripted(
            20,
            20,
            &[(Cell::new(10, 10), 3), (Cell::new(12, 12), 3)],
            &[Cell::new(12, 11)],
            &[],
        );
        let obs = w.observe(0).unwrap();
        assert_eq!(obs.spatial.get(Channel::OtherAgents, 2, 2), 0.0);
        assert_eq!(obs.spatial.get(Channel::Trees, 2, 1), 0.0);
        let visible = (-2..=2)
            .flat_map(|dy| (-2..=2).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| SpatialView::in_view(dx, dy))
            .count();
        assert_eq!(visible, 13);
    }

    #[test]
    fn borders_show_as_walls() {
        let w = scripted(5, 5, &[(Cell::new(0, 0), 3)], &[], &[]);
        let obs = w.observe(0).unwrap();
        assert_eq!(obs.spatial.get(Channel::Walls, -1, 0), 1.0);
        assert_eq!(obs.spatial.get(Channel::Walls, 1, 0), 0.0);
    }

    #[test]
    fn observe_is_pure() {
        let w = scripted(8, 8, &[(Cell::new(3, 3), 3), (Cell::new(4, 4), 5)], &[Cell::new(2, 3)], &[]);
        let before = w.snapshot();
        assert_eq!(w.observe(1).unwrap(), w.observe(1).unwrap());
        assert_eq!(w.snapshot(), before);
        assert!(matches!(w.observe(2), Err(WorldError::UnknownAgent(2))));
    }

    #[test]
    fn nonspatial_layout() {
        let w = scripted(8, 8, &[(Cell::new(4, 2), 3)], &[Cell::new(2, 3)], &[]);
        let v = w.observe(0).unwrap().nonspatial();
        // 33 one-hot + reward + (1 agent + 1 tree) * 2 + own 2 + 1 flag
        assert_eq!(v.len(), 33 + 1 + 4 + 2 + 1);
        assert!(v[..33].iter().all(|&x| x == 0.0));
        assert_eq!(v[34], 0.5);
    }
}
