use rand::Rng;

use super::features::FeatureEncoder;
#[cfg(test)]
use super::features::Component;
use super::LearnerError;
use crate::gridworld::{Action, Observation, ACTION_COUNT};
use num_traits::{One, Zero};

use crate::scalar::{lit, Real, Scalar};

/// One stored experience. `state` is the approximator's encoding of the
/// observation; the reward is the shaped learning signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<S, T> {
    pub state: S,
    pub action: usize,
    pub shaped_reward: T,
    pub next_state: S,
    pub terminal: bool,
}

/// Observation -> one value per action.
pub trait ValueApproximator {
    type Scalar: Real;
    type State: Clone;

    fn encode(&self, observation: &Observation) -> Self::State;

    fn action_values(&self, state: &Self::State) -> [Self::Scalar; ACTION_COUNT];

    /// Move each transition's value toward its one-step target and return the
    /// mean squared TD error measured before each update.
    fn apply_td(
        &mut self,
        batch: &[&Transition<Self::State, Self::Scalar>],
        alpha: Self::Scalar,
        gamma: Self::Scalar,
    ) -> Self::Scalar;
}

pub fn td_update<A: ValueApproximator>(
    approximator: &mut A,
    batch: &[&Transition<A::State, A::Scalar>],
    alpha: A::Scalar,
    gamma: A::Scalar,
) -> Result<A::Scalar, LearnerError> {
    if batch.is_empty() {
        return Err(LearnerError::EmptyBatch);
    }
    if !(alpha >= A::Scalar::zero()) {
        return Err(LearnerError::InvalidRate(alpha.to_f64_lossy()));
    }
    if !(gamma >= A::Scalar::zero() && gamma <= A::Scalar::one()) {
        return Err(LearnerError::InvalidDiscount(gamma.to_f64_lossy()));
    }
    Ok(approximator.apply_td(batch, alpha, gamma))
}

/// Index of the largest value; ties go to the lowest index.
pub fn greedy_index<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy choice over the 33 actions.
pub fn select_action<A: ValueApproximator, R: Rng + ?Sized>(
    approximator: &A,
    observation: &Observation,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    let state = approximator.encode(observation);
    select_action_encoded(approximator, &state, epsilon, rng)
}

pub(crate) fn select_action_encoded<A: ValueApproximator, R: Rng + ?Sized>(
    approximator: &A,
    state: &A::State,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    let index = if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        rng.gen_range(0..ACTION_COUNT)
    } else {
        greedy_index(&approximator.action_values(state))
    };
    Action::from_index(index).expect("index within action space")
}

/// Most feature groups a [`LinearQ`] may use.
pub const MAX_GROUPS: usize = 4;

/// Active row per feature group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ActiveRows {
    rows: [u32; MAX_GROUPS],
    len: u8,
}

impl ActiveRows {
    pub fn new(rows: &[usize]) -> Self {
        assert!(rows.len() <= MAX_GROUPS && !rows.is_empty());
        let mut r = [0u32; MAX_GROUPS];
        for (dst, &src) in r.iter_mut().zip(rows) {
            *dst = src as u32;
        }
        ActiveRows {
            rows: r,
            len: rows.len() as u8,
        }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.rows[..self.len as usize]
    }
}

/// Action values that are a sum of one weight row per feature group. With a
/// single group this is a plain lookup table.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearQ<T> {
    encoder: FeatureEncoder,
    weights: Vec<[T; ACTION_COUNT]>,
}

impl<T: Real> LinearQ<T> {
    pub fn new(encoder: FeatureEncoder) -> Self {
        Self::with_initial_value(encoder, T::zero())
    }

    /// Every action value starts at `initial` (split evenly across groups).
    pub fn with_initial_value(encoder: FeatureEncoder, initial: T) -> Self {
        assert!(
            !encoder.groups.is_empty() && encoder.groups.len() <= MAX_GROUPS,
            "between 1 and {MAX_GROUPS} feature groups"
        );
        let rows = encoder.row_count();
        let w = initial / lit::<T>(encoder.groups.len() as f64);
        LinearQ {
            encoder,
            weights: vec![[w; ACTION_COUNT]; rows],
        }
    }

    pub fn encoder(&self) -> &FeatureEncoder {
        &self.encoder
    }

    pub fn q(&self, state: &ActiveRows, action: usize) -> T {
        state
            .as_slice()
            .iter()
            .fold(T::zero(), |acc, &r| acc + self.weights[r as usize][action])
    }

    pub fn row_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, row: usize, action: usize) -> T {
        self.weights[row][action]
    }

    pub fn set_weight(&mut self, row: usize, action: usize, value: T) {
        self.weights[row][action] = value;
    }

    pub(crate) fn raw_weights(&self) -> &[[T; ACTION_COUNT]] {
        &self.weights
    }

    pub(crate) fn from_parts(
        encoder: FeatureEncoder,
        weights: Vec<[T; ACTION_COUNT]>,
    ) -> Result<Self, LearnerError> {
        if weights.len() != encoder.row_count() {
            return Err(LearnerError::Format(format!(
                "weight table has {} rows, encoder expects {}",
                weights.len(),
                encoder.row_count()
            )));
        }
        Ok(LinearQ { encoder, weights })
    }
}

impl<T: Real> ValueApproximator for LinearQ<T> {
    type Scalar = T;
    type State = ActiveRows;

    fn encode(&self, observation: &Observation) -> ActiveRows {
        ActiveRows::new(&self.encoder.encode(observation))
    }

    fn action_values(&self, state: &ActiveRows) -> [T; ACTION_COUNT] {
        let mut out = [T::zero(); ACTION_COUNT];
        for &r in state.as_slice() {
            for (o, w) in out.iter_mut().zip(&self.weights[r as usize]) {
                *o = *o + *w;
            }
        }
        out
    }

    fn apply_td(&mut self, batch: &[&Transition<ActiveRows, T>], alpha: T, gamma: T) -> T {
        let mut sq = T::zero();
        for tr in batch {
            let bootstrap = if tr.terminal {
                T::zero()
            } else {
                self.action_values(&tr.next_state)
                    .iter()
                    .copied()
                    .fold(T::neg_infinity(), T::max)
            };
            let target = tr.shaped_reward + gamma * bootstrap;
            let err = target - self.q(&tr.state, tr.action);
            sq = sq + err * err;
            let rows = tr.state.as_slice();
            let step = alpha * err / lit::<T>(rows.len() as f64);
            for &r in rows {
                let w = &mut self.weights[r as usize][tr.action];
                *w = *w + step;
            }
        }
        sq / lit::<T>(batch.len() as f64)
    }
}
