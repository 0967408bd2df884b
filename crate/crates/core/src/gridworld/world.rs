use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{Action, ActionKind};
use super::WorldError;

/// Cumulative harvest above which a tree dies.
pub const TREE_DEATH_THRESHOLD: u32 = 5;
/// Number of recent raw rewards each agent can see about itself.
pub const RECENT_WINDOW: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }
}

/// How many apples an agent takes per gather.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Capability {
    /// Same cap every step.
    Fixed { cap: u32 },
    /// `even` on even step indices, `odd` on odd ones.
    Alternating { even: u32, odd: u32 },
}

impl Capability {
    pub fn cap_at(&self, step_index: u32) -> u32 {
        match *self {
            Capability::Fixed { cap } => cap,
            Capability::Alternating { even, odd } => {
                if step_index % 2 == 0 {
                    even
                } else {
                    odd
                }
            }
        }
    }
}

/// Static description of a world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub width: i32,
    pub height: i32,
    #[serde(default)]
    pub walls: Vec<Cell>,
    pub trees: usize,
    pub episode_length: u32,
    /// One entry per agent; agent ids are indices.
    pub capabilities: Vec<Capability>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppleTree {
    pub position: Cell,
    pub harvested_total: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub agent_id: usize,
    pub position: Cell,
    pub capability: Capability,
    pub last_action: Option<Action>,
    pub last_reward: u32,
    /// Most recent first.
    pub recent_rewards: [u32; RECENT_WINDOW],
    pub episode_return: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tile {
    Empty,
    Wall,
    Agent(usize),
    Tree(usize),
}

/// The replenishing-resource gridworld.
#[derive(Clone, Debug)]
pub struct GridWorld {
    width: i32,
    height: i32,
    walls: BTreeSet<Cell>,
    trees: Vec<AppleTree>,
    agents: Vec<AgentState>,
    tiles: Vec<Tile>,
    step_index: u32,
    episode_length: u32,
    retired_harvest: u64,
    public_flags: Vec<bool>,
    rng: ChaCha8Rng,
}

impl GridWorld {
    pub fn new(config: &WorldConfig, seed: u64) -> Result<Self, WorldError> {
        if config.width <= 0 || config.height <= 0 {
            return Err(WorldError::InvalidDimensions {
                width: config.width,
                height: config.height,
            });
        }
        if config.episode_length == 0 {
            return Err(WorldError::InvalidEpisodeLength);
        }
        let mut tiles = vec![Tile::Empty; (config.width * config.height) as usize];
        let mut walls = BTreeSet::new();
        for &w in &config.walls {
            if !in_bounds(config.width, config.height, w) {
                return Err(WorldError::WallOutOfBounds(w));
            }
            walls.insert(w);
            tiles[(w.y * config.width + w.x) as usize] = Tile::Wall;
        }
        let n_agents = config.capabilities.len();
        let free = tiles.len() - walls.len();
        if n_agents + config.trees > free {
            return Err(WorldError::Overflow {
                entities: n_agents + config.trees,
                free_cells: free,
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut free_cells: Vec<Cell> = (0..config.height)
            .flat_map(|y| (0..config.width).map(move |x| Cell::new(x, y)))
            .filter(|c| !walls.contains(c))
            .collect();
        let (chosen, _) = free_cells.partial_shuffle(&mut rng, n_agents + config.trees);
        let chosen = chosen.to_vec();

        let agents: Vec<AgentState> = config
            .capabilities
            .iter()
            .zip(&chosen[..n_agents])
            .enumerate()
            .map(|(agent_id, (&capability, &position))| AgentState {
                agent_id,
                position,
                capability,
                last_action: None,
                last_reward: 0,
                recent_rewards: [0; RECENT_WINDOW],
                episode_return: 0,
            })
            .collect();
        let trees: Vec<AppleTree> = chosen[n_agents..]
            .iter()
            .map(|&position| AppleTree {
                position,
                harvested_total: 0,
            })
            .collect();

        let mut world = GridWorld {
            width: config.width,
            height: config.height,
            walls,
            trees,
            agents,
            tiles,
            step_index: 0,
            episode_length: config.episode_length,
            retired_harvest: 0,
            public_flags: vec![false; n_agents],
            rng,
        };
        for a in 0..world.agents.len() {
            let p = world.agents[a].position;
            world.set_tile(p, Tile::Agent(a));
        }
        for t in 0..world.trees.len() {
            let p = world.trees[t].position;
            world.set_tile(p, Tile::Tree(t));
        }
        Ok(world)
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn step_index(&self) -> u32 {
        self.step_index
    }

    pub fn episode_length(&self) -> u32 {
        self.episode_length
    }

    pub fn is_done(&self) -> bool {
        self.step_index >= self.episode_length
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn trees(&self) -> &[AppleTree] {
        &self.trees
    }

    pub fn walls(&self) -> &BTreeSet<Cell> {
        &self.walls
    }

    pub fn agent(&self, agent_id: usize) -> Result<&AgentState, WorldError> {
        self.agents
            .get(agent_id)
            .ok_or(WorldError::UnknownAgent(agent_id))
    }

    /// Apples taken from trees that have since died.
    pub fn retired_harvest(&self) -> u64 {
        self.retired_harvest
    }

    /// Total apples harvested this episode from live and removed trees.
    pub fn total_harvest(&self) -> u64 {
        self.retired_harvest
            + self
                .trees
                .iter()
                .map(|t| t.harvested_total as u64)
                .sum::<u64>()
    }

    /// Detector verdicts broadcast to every agent's observation.
    pub fn public_flags(&self) -> &[bool] {
        &self.public_flags
    }

    pub fn set_public_flags(&mut self, flags: &[bool]) -> Result<(), WorldError> {
        if flags.len() != self.agents.len() {
            return Err(WorldError::ActionCount {
                expected: self.agents.len(),
                got: flags.len(),
            });
        }
        self.public_flags.copy_from_slice(flags);
        Ok(())
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        in_bounds(self.width, self.height, c)
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        self.in_bounds(c) && matches!(self.tile(c), Tile::Wall)
    }

    pub fn agent_at(&self, c: Cell) -> Option<usize> {
        if !self.in_bounds(c) {
            return None;
        }
        match self.tile(c) {
            Tile::Agent(a) => Some(a),
            _ => None,
        }
    }

    pub fn tree_at(&self, c: Cell) -> Option<usize> {
        if !self.in_bounds(c) {
            return None;
        }
        match self.tile(c) {
            Tile::Tree(t) => Some(t),
            _ => None,
        }
    }

    /// Advance one step. Moves resolve first in ascending agent id, then
    /// gathers in ascending agent id, then dead trees respawn.
    pub fn step(&mut self, joint_actions: &[Action]) -> Result<Vec<u32>, WorldError> {
        if joint_actions.len() != self.agents.len() {
            return Err(WorldError::ActionCount {
                expected: self.agents.len(),
                got: joint_actions.len(),
            });
        }
        if self.is_done() {
            return Err(WorldError::EpisodeOver(self.episode_length));
        }
        if let Some(bad) = joint_actions.iter().find(|a| !a.is_valid()) {
            return Err(WorldError::InvalidAction(*bad));
        }

        for (id, action) in joint_actions.iter().enumerate() {
            if action.kind != ActionKind::Move || (action.dx, action.dy) == (0, 0) {
                continue;
            }
            let from = self.agents[id].position;
            let to = from.offset(action.dx, action.dy);
            if self.in_bounds(to) && self.tile(to) == Tile::Empty {
                self.set_tile(from, Tile::Empty);
                self.set_tile(to, Tile::Agent(id));
                self.agents[id].position = to;
            }
        }

        let mut rewards = vec![0u32; self.agents.len()];
        for (id, action) in joint_actions.iter().enumerate() {
            if action.kind != ActionKind::Gather {
                continue;
            }
            let target = self.agents[id].position.offset(action.dx, action.dy);
            if let Some(t) = self.tree_at(target) {
                let apples = self.agents[id].capability.cap_at(self.step_index);
                self.trees[t].harvested_total += apples;
                rewards[id] = apples;
            }
        }

        let dead: Vec<usize> = (0..self.trees.len())
            .filter(|&t| self.trees[t].harvested_total > TREE_DEATH_THRESHOLD)
            .collect();
        for &t in &dead {
            let p = self.trees[t].position;
            self.set_tile(p, Tile::Empty);
            self.retired_harvest += self.trees[t].harvested_total as u64;
        }
        for &t in &dead {
            let free: Vec<usize> = self
                .tiles
                .iter()
                .enumerate()
                .filter(|(_, tile)| **tile == Tile::Empty)
                .map(|(i, _)| i)
                .collect();
            // Removal freed at least one cell.
            let idx = free[self.rng.gen_range(0..free.len())];
            let cell = Cell::new(idx as i32 % self.width, idx as i32 / self.width);
            self.trees[t] = AppleTree {
                position: cell,
                harvested_total: 0,
            };
            self.set_tile(cell, Tile::Tree(t));
        }

        for (id, agent) in self.agents.iter_mut().enumerate() {
            let r = rewards[id];
            agent.last_action = Some(joint_actions[id]);
            agent.last_reward = r;
            agent.recent_rewards.rotate_right(1);
            agent.recent_rewards[0] = r;
            agent.episode_return += r as u64;
        }
        self.step_index += 1;
        Ok(rewards)
    }

    /// Text snapshot: `#` wall, `T` tree, agent ids as digits (`A`.. above 9), `.` empty.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "step {}/{} {}x{}",
            self.step_index, self.episode_length, self.width, self.height
        );
        for y in 0..self.height {
            for x in 0..self.width {
                let glyph = match self.tile(Cell::new(x, y)) {
                    Tile::Empty => '.',
                    Tile::Wall => '#',
                    Tile::Tree(_) => 'T',
                    Tile::Agent(a) => std::char::from_digit(a as u32 % 36, 36)
                        .map(|c| c.to_ascii_uppercase())
                        .unwrap_or('@'),
                };
                out.push(glyph);
            }
            out.push('\n');
        }
        out
    }

    fn tile(&self, c: Cell) -> Tile {
        self.tiles[(c.y * self.width + c.x) as usize]
    }

    fn set_tile(&mut self, c: Cell, t: Tile) {
        let w = self.width;
        self.tiles[(c.y * w + c.x) as usize] = t;
    }
}

fn in_bounds(width: i32, height: i32, c: Cell) -> bool {
    c.x >= 0 && c.y >= 0 && c.x < width && c.y < height
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn config(w: i32, h: i32, caps: &[u32], trees: usize) -> WorldConfig {
        WorldConfig {
            width: w,
            height: h,
            walls: vec![],
            trees,
            episode_length: 10,
            capabilities: caps.iter().map(|&cap| Capability::Fixed { cap }).collect(),
        }
    }

    /// Builds a world and then overrides positions for scripted tests.
    pub(crate) fn scripted(
        w: i32,
        h: i32,
        agents: &[(Cell, u32)],
        trees: &[Cell],
        walls: &[Cell],
    ) -> GridWorld {
        let mut cfg = config(
            w,
            h,
            &agents.iter().map(|a| a.1).collect::<Vec<_>>(),
            trees.len(),
        );
        cfg.walls = walls.to_vec();
        let mut world = GridWorld::new(&cfg, 0).unwrap();
        for i in 0..world.tiles.len() {
            if world.tiles[i] != Tile::Wall {
                world.tiles[i] = Tile::Empty;
            }
        }
        for (i, &(p, _)) in agents.iter().enumerate() {
            world.agents[i].position = p;
            world.set_tile(p, Tile::Agent(i));
        }
        for (i, &p) in trees.iter().enumerate() {
            world.trees[i].position = p;
            world.set_tile(p, Tile::Tree(i));
        }
        world
    }

    fn gather_east() -> Action {
        Action::gather(1, 0).unwrap()
    }

    #[test]
    fn new_world_places_distinct_entities() {
        let world = GridWorld::new(&config(20, 20, &[3; 5], 10), 7).unwrap();
        let mut cells: Vec<Cell> = world.agents().iter().map(|a| a.position).collect();
        cells.extend(world.trees().iter().map(|t| t.position));
        let unique: BTreeSet<_> = cells.iter().collect();
        assert_eq!(unique.len(), 15);
        assert_eq!(world.agents().len(), 5);
        assert_eq!(world.step_index(), 0);
    }

    #[test]
    fn overflow_is_rejected() {
        let err = GridWorld::new(&config(2, 2, &[3; 5], 0), 1).unwrap_err();
        assert!(matches!(
            err,
            WorldError::Overflow {
                entities: 5,
                free_cells: 4
            }
        ));
    }

    #[test]
    fn same_seed_same_layout() {
        let cfg = config(12, 12, &[3; 5], 6);
        let a = GridWorld::new(&cfg, 99).unwrap();
        let b = GridWorld::new(&cfg, 99).unwrap();
        assert_eq!(a.snapshot(), b.snapshot());
        let c = GridWorld::new(&cfg, 100).unwrap();
        assert_ne!(a.snapshot(), c.snapshot());
    }

    #[test]
    fn compliant_gather_takes_three() {
        let mut w = scripted(5, 5, &[(Cell::new(1, 1), 3)], &[Cell::new(2, 1)], &[]);
        let r = w.step(&[gather_east()]).unwrap();
        assert_eq!(r, vec![3]);
        assert_eq!(w.trees()[0].harvested_total, 3);
        assert_eq!(w.agents()[0].episode_return, 3);
    }

    #[test]
    fn tree_dies_after_the_step_that_exceeds_five() {
        // Hand trace: cap 5, first gather leaves the counter at 5 (alive),
        // second gather pushes it to 10 and the tree respawns elsewhere.
        let mut w = scripted(6, 6, &[(Cell::new(1, 1), 5)], &[Cell::new(2, 1)], &[]);
        assert_eq!(w.step(&[gather_east()]).unwrap(), vec![5]);
        assert_eq!(w.trees()[0].position, Cell::new(2, 1));
        assert_eq!(w.trees()[0].harvested_total, 5);
        assert_eq!(w.step(&[gather_east()]).unwrap(), vec![5]);
        assert_eq!(w.trees()[0].harvested_total, 0);
        assert_eq!(w.retired_harvest(), 10);
        assert_eq!(w.agents()[0].episode_return, 10);
        assert_eq!(w.trees().len(), 1);
        assert_eq!(w.total_harvest(), 10);
    }

    #[test]
    fn same_tree_gathers_share_the_counter() {
        let mut w = scripted(
            6,
            6,
            &[(Cell::new(1, 1), 3), (Cell::new(3, 1), 3)],
            &[Cell::new(2, 1)],
            &[],
        );
        let r = w
            .step(&[gather_east(), Action::gather(-1, 0).unwrap()])
            .unwrap();
        assert_eq!(r, vec![3, 3]);
        // 6 > 5: removed at end of step
        assert_eq!(w.retired_harvest(), 6);
        assert_eq!(w.trees()[0].harvested_total, 0);
    }

    #[test]
    fn blocked_moves() {
        let wall = Cell::new(2, 1);
        let mut w = scripted(5, 5, &[(Cell::new(1, 1), 3)], &[], &[wall]);
        let r = w.step(&[Action::movement(1, 0).unwrap()]).unwrap();
        assert_eq!(r, vec![0]);
        assert_eq!(w.agents()[0].position, Cell::new(1, 1));
        w.step(&[Action::movement(-3, 0).unwrap()]).unwrap();
        assert_eq!(w.agents()[0].position, Cell::new(1, 1));
        w.step(&[Action::movement(0, 3).unwrap()]).unwrap();
        assert_eq!(w.agents()[0].position, Cell::new(1, 4));
    }

    #[test]
    fn move_conflicts_go_to_lower_id() {
        let mut w = scripted(
            7,
            3,
            &[(Cell::new(1, 1), 3), (Cell::new(5, 1), 3)],
            &[],
            &[],
        );
        let r = w
            .step(&[
                Action::movement(2, 0).unwrap(),
                Action::movement(-2, 0).unwrap(),
            ])
            .unwrap();
        assert_eq!(r, vec![0, 0]);
        assert_eq!(w.agents()[0].position, Cell::new(3, 1));
        assert_eq!(w.agents()[1].position, Cell::new(5, 1));
    }

    #[test]
    fn alternating_capability() {
        let cap = Capability::Alternating { even: 3, odd: 2 };
        let two_steps: u32 = (0..2).map(|s| cap.cap_at(s)).sum();
        assert_eq!(two_steps, 5);
    }

    #[test]
    fn contract_violations() {
        let mut w = GridWorld::new(&config(5, 5, &[3, 3], 1), 3).unwrap();
        assert!(matches!(
            w.step(&[Action::NOOP]),
            Err(WorldError::ActionCount {
                expected: 2,
                got: 1
            })
        ));
        for _ in 0..10 {
            w.step(&[Action::NOOP, Action::NOOP]).unwrap();
        }
        assert!(matches!(
            w.step(&[Action::NOOP, Action::NOOP]),
            Err(WorldError::EpisodeOver(10))
        ));
        assert!(matches!(w.agent(5), Err(WorldError::UnknownAgent(5))));
    }

    #[test]
    fn snapshot_glyphs() {
        let w = scripted(
            4,
            2,
            &[(Cell::new(0, 0), 3)],
            &[Cell::new(1, 0)],
            &[Cell::new(3, 1)],
        );
        assert_eq!(w.snapshot(), "step 0/10 4x2\n0T..\n...#\n");
    }
}
