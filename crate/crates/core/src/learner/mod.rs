//! Independent per-agent value learners: epsilon-greedy acting, FIFO replay
//! and one-step temporal-difference updates.

mod agent;
mod approximator;
mod features;
mod persist;
mod replay;
mod schedule;

pub use agent::{LearnerParams, LearningAgent, Mode};
pub use approximator::{
    greedy_index, select_action, td_update, ActiveRows, LinearQ, Transition, ValueApproximator,
    MAX_GROUPS,
};
pub use features::{Component, FeatureEncoder, FeatureGroup};
pub use persist::{load_linear, save_linear, MODEL_FORMAT, MODEL_VERSION};
pub use replay::{ReplayBuffer, DEFAULT_REPLAY_CAPACITY};
pub use schedule::{epsilon_at, EpsilonSchedule};

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("temporal-difference update needs a non-empty batch")]
    EmptyBatch,
    #[error("learning rate must be non-negative, got {0}")]
    InvalidRate(f64),
    #[error("discount must lie in [0, 1], got {0}")]
    InvalidDiscount(f64),
    #[error("epsilon schedule has no breakpoints")]
    EmptySchedule,
    #[error("invalid epsilon schedule: {0}")]
    InvalidSchedule(String),
    #[error("i/o error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("malformed model file: {0}")]
    Format(String),
}
