use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::approximator::{select_action_encoded, td_update, Transition, ValueApproximator};
use super::replay::{ReplayBuffer, DEFAULT_REPLAY_CAPACITY};
use super::schedule::{epsilon_at, EpsilonSchedule};
use crate::gridworld::{Action, Feedback, Observation, Policy};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerParams {
    pub alpha: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Starting value of every action value.
    #[serde(default)]
    pub initial_value: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            alpha: 0.1,
            gamma: 0.95,
            batch_size: 32,
            replay_capacity: DEFAULT_REPLAY_CAPACITY,
            initial_value: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Epsilon-greedy acting with replay updates after every step.
    Train,
    /// Frozen greedy policy.
    Greedy,
}

/// An independent learner: owns its approximator, replay buffer and RNG.
#[derive(Clone, Debug)]
pub struct LearningAgent<A: ValueApproximator> {
    approximator: A,
    buffer: ReplayBuffer<Transition<A::State, A::Scalar>>,
    params: LearnerParams,
    schedule: EpsilonSchedule,
    rng: ChaCha8Rng,
    clock: u64,
    mode: Mode,
    last_loss: Option<f64>,
}

impl<A: ValueApproximator> LearningAgent<A> {
    pub fn new(approximator: A, params: LearnerParams, schedule: EpsilonSchedule, seed: u64) -> Self {
        LearningAgent {
            approximator,
            buffer: ReplayBuffer::new(params.replay_capacity),
            params,
            schedule,
            rng: ChaCha8Rng::seed_from_u64(seed),
            clock: 0,
            mode: Mode::Train,
            last_loss: None,
        }
    }

    pub fn approximator(&self) -> &A {
        &self.approximator
    }

    pub fn into_approximator(self) -> A {
        self.approximator
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Position on the exploration schedule (the caller's unit, e.g. episodes).
    pub fn set_clock(&mut self, clock: u64) {
        self.clock = clock;
    }

    pub fn epsilon(&self) -> f64 {
        match self.mode {
            Mode::Train => epsilon_at(&self.schedule, self.clock),
            Mode::Greedy => 0.0,
        }
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.last_loss
    }
}

impl<A: ValueApproximator> Policy for LearningAgent<A> {
    fn act(&mut self, observation: &Observation) -> Action {
        let state = self.approximator.encode(observation);
        let eps = self.epsilon();
        select_action_encoded(&self.approximator, &state, eps, &mut self.rng)
    }

    fn feedback(&mut self, fb: &Feedback<'_>) {
        if self.mode != Mode::Train {
            return;
        }
        self.buffer.push(Transition {
            state: self.approximator.encode(fb.observation),
            action: fb.action.index(),
            shaped_reward: A::Scalar::from_f64_lossy(fb.signal),
            next_state: self.approximator.encode(fb.next_observation),
            terminal: fb.terminal,
        });
        let batch = self.buffer.sample(self.params.batch_size, &mut self.rng);
        let alpha = A::Scalar::from_f64_lossy(self.params.alpha);
        let gamma = A::Scalar::from_f64_lossy(self.params.gamma);
        // parameters are validated when the experiment config is parsed
        let loss = td_update(&mut self.approximator, &batch, alpha, gamma)
            .expect("valid learner parameters");
        self.last_loss = Some(loss.to_f64_lossy());
    }
}
