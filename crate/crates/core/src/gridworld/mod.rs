//! The replenishing-resource gridworld: movement, harvesting, tree death and
//! respawn, local observations and episode rollouts.

mod action;
mod episode;
mod observation;
mod world;

pub use action::{all_actions, Action, ActionKind, ACTION_COUNT, GATHER_RANGE, MOVE_RANGE};
pub use episode::{
    run_episode, ConstantPolicy, EpisodeHook, EpisodeOutcome, Feedback, Policy, ScriptedPolicy,
    StepRecord,
};
pub use observation::{Channel, Observation, SpatialView, CHANNELS, VIEW_RANGE, VIEW_SIDE};
pub use world::{
    AgentState, AppleTree, Capability, Cell, GridWorld, WorldConfig, RECENT_WINDOW,
    TREE_DEATH_THRESHOLD,
};

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error("grid dimensions must be positive, got {width}x{height}")]
    InvalidDimensions { width: i32, height: i32 },
    #[error("episode length must be positive")]
    InvalidEpisodeLength,
    #[error("{entities} agents and trees do not fit in {free_cells} free cells")]
    Overflow { entities: usize, free_cells: usize },
    #[error("wall at {0:?} is outside the grid")]
    WallOutOfBounds(Cell),
    #[error("expected {expected} entries (one per agent), got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("action {0} is outside the action space")]
    InvalidAction(Action),
    #[error("episode already finished after {0} steps")]
    EpisodeOver(u32),
    #[error("unknown agent id {0}")]
    UnknownAgent(usize),
}
