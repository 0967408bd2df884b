//! Reward shaping: diminishing returns, the windowed threshold regulation and
//! boycotting of flagged agents.
//!
//! Operators are pure and generic over [`Scalar`]; [`ShapingHook`] wires a
//! per-agent [`Pipeline`] into episode rollouts on `f64`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::gridworld::{EpisodeHook, StepRecord};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapingError {
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("a shaping pipeline needs at least one stage")]
    EmptyPipeline,
    #[error("invalid shaping parameter: {0}")]
    InvalidParameter(String),
}

/// Non-increasing multiplier `F(I)` applied to raw rewards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DecayFn {
    /// `1 / (1 + I / scale)`
    Reciprocal { scale: f64 },
    /// `exp(-rate * I)`
    Exponential { rate: f64 },
    /// `1` while `I <= threshold`, `above` afterwards.
    Step { threshold: f64, above: f64 },
    /// `max(floor, 1 - slope * I)`
    Linear { slope: f64, floor: f64 },
}

impl DecayFn {
    pub fn validate(&self) -> Result<(), ShapingError> {
        let ok = match *self {
            DecayFn::Reciprocal { scale } => scale > 0.0,
            DecayFn::Exponential { rate } => rate >= 0.0,
            DecayFn::Step { above, .. } => above <= 1.0,
            DecayFn::Linear { slope, floor } => slope >= 0.0 && floor <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ShapingError::InvalidParameter(format!(
                "{self:?} is not non-increasing with F(0) = 1"
            )))
        }
    }

    pub fn eval<T: Scalar>(&self, accumulated: &T) -> T {
        match *self {
            DecayFn::Reciprocal { scale } => {
                let s = T::from_f64_lossy(scale);
                s.clone() / (s + accumulated.clone())
            }
            DecayFn::Exponential { rate } => {
                T::from_f64_lossy((-rate * accumulated.to_f64_lossy()).exp())
            }
            DecayFn::Step { threshold, above } => {
                if *accumulated <= T::from_f64_lossy(threshold) {
                    T::one()
                } else {
                    T::from_f64_lossy(above)
                }
            }
            DecayFn::Linear { slope, floor } => {
                let v = T::one() - T::from_f64_lossy(slope) * accumulated.clone();
                let f = T::from_f64_lossy(floor);
                if v < f {
                    f
                } else {
                    v
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiminishConfig {
    pub window: usize,
    pub decay: DecayFn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRegulation {
    pub tau: f64,
    pub window: usize,
}

impl Default for ThresholdRegulation {
    fn default() -> Self {
        ThresholdRegulation {
            tau: 2.0,
            window: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoycottConfig {
    #[serde(alias = "B")]
    pub ratio: f64,
}

/// The last `capacity` raw rewards of one agent, most recent last.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardHistory<T> {
    capacity: usize,
    window: VecDeque<T>,
}

impl<T: Scalar> RewardHistory<T> {
    pub fn new(capacity: usize) -> Self {
        RewardHistory {
            capacity,
            window: VecDeque::with_capacity(capacity),
        }
    }

    pub fn from_slice(capacity: usize, rewards: &[T]) -> Self {
        let mut h = RewardHistory::new(capacity);
        for r in rewards {
            h.push(r.clone());
        }
        h
    }

    pub fn push(&mut self, reward: T) {
        if self.capacity == 0 {
            return;
        }
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(reward);
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Sum of everything stored; missing early terms count as zero.
    pub fn accumulated(&self) -> T {
        self.window.iter().fold(T::zero(), |acc, r| acc + r.clone())
    }

    /// Sum of the `k` most recent rewards.
    pub fn sum_last(&self, k: usize) -> T {
        self.window
            .iter()
            .rev()
            .take(k)
            .fold(T::zero(), |acc, r| acc + r.clone())
    }

    pub fn clear(&mut self) {
        self.window.clear();
    }
}

/// `raw * F(I)` where `I` is the sum of the stored window.
pub fn diminish<T: Scalar>(raw: T, history: &RewardHistory<T>, config: &DiminishConfig) -> T {
    raw * config.decay.eval(&history.sum_last(config.window))
}

/// `raw` while the accumulated reward is at most `tau`, exactly `-1` above it.
pub fn threshold_diminish<T: Scalar>(raw: T, accumulated: &T, tau: &T) -> T {
    if accumulated <= tau {
        raw
    } else {
        -T::one()
    }
}

/// Subtract `ratio` times the mean observed reward of flagged agents.
/// Unchanged when nobody is flagged.
pub fn boycott_shape<T: Scalar>(
    raw: T,
    verdicts: &[bool],
    observed: &[T],
    ratio: &T,
) -> Result<T, ShapingError> {
    if verdicts.len() != observed.len() {
        return Err(ShapingError::LengthMismatch {
            what: "observed rewards",
            expected: verdicts.len(),
            got: observed.len(),
        });
    }
    let (sum, count) = verdicts
        .iter()
        .zip(observed)
        .filter(|(&flagged, _)| flagged)
        .fold((T::zero(), T::zero()), |(s, c), (_, r)| {
            (s + r.clone(), c + T::one())
        });
    if count.is_zero() {
        return Ok(raw);
    }
    Ok(raw - ratio.clone() * (sum / count))
}

/// Per-step inputs shared by all stages for one agent.
#[derive(Clone, Copy, Debug)]
pub struct ShapingContext<'a, T> {
    /// Raw rewards from previous steps, excluding the current one.
    pub history: &'a RewardHistory<T>,
    pub verdicts: &'a [bool],
    pub observed: &'a [T],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapingStage {
    Identity,
    Diminish(DiminishConfig),
    Threshold(ThresholdRegulation),
    Boycott(BoycottConfig),
}

impl ShapingStage {
    pub fn apply<T: Scalar>(&self, input: T, ctx: &ShapingContext<'_, T>) -> Result<T, ShapingError> {
        match self {
            ShapingStage::Identity => Ok(input),
            ShapingStage::Diminish(cfg) => Ok(diminish(input, ctx.history, cfg)),
            ShapingStage::Threshold(reg) => Ok(threshold_diminish(
                input,
                &ctx.history.sum_last(reg.window),
                &T::from_f64_lossy(reg.tau),
            )),
            ShapingStage::Boycott(cfg) => boycott_shape(
                input,
                ctx.verdicts,
                ctx.observed,
                &T::from_f64_lossy(cfg.ratio),
            ),
        }
    }

    fn window(&self) -> usize {
        match self {
            ShapingStage::Diminish(c) => c.window,
            ShapingStage::Threshold(r) => r.window,
            _ => 0,
        }
    }

    fn validate(&self) -> Result<(), ShapingError> {
        match self {
            ShapingStage::Diminish(c) => {
                if c.window == 0 {
                    return Err(ShapingError::InvalidParameter("window must be >= 1".into()));
                }
                c.decay.validate()
            }
            ShapingStage::Threshold(r) if r.window == 0 => {
                Err(ShapingError::InvalidParameter("window must be >= 1".into()))
            }
            ShapingStage::Boycott(b) if !(b.ratio >= 0.0) => Err(ShapingError::InvalidParameter(
                format!("boycott ratio must be non-negative, got {}", b.ratio),
            )),
            _ => Ok(()),
        }
    }
}

/// Stages applied left to right, each consuming the previous output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    stages: Vec<ShapingStage>,
}

pub fn compose_pipeline(stages: Vec<ShapingStage>) -> Result<Pipeline, ShapingError> {
    if stages.is_empty() {
        return Err(ShapingError::EmptyPipeline);
    }
    for s in &stages {
        s.validate()?;
    }
    Ok(Pipeline { stages })
}

impl Pipeline {
    pub fn identity() -> Self {
        Pipeline {
            stages: vec![ShapingStage::Identity],
        }
    }

    pub fn stages(&self) -> &[ShapingStage] {
        &self.stages
    }

    /// Longest window any stage looks back over.
    pub fn history_len(&self) -> usize {
        self.stages.iter().map(ShapingStage::window).max().unwrap_or(0)
    }

    pub fn apply<T: Scalar>(&self, raw: T, ctx: &ShapingContext<'_, T>) -> Result<T, ShapingError> {
        self.stages
            .iter()
            .try_fold(raw, |acc, stage| stage.apply(acc, ctx))
    }
}

/// Applies each agent's pipeline to the step's raw rewards. Agents without a
/// pipeline learn from raw rewards. Verdicts are fixed until replaced.
#[derive(Clone, Debug)]
pub struct ShapingHook {
    pipelines: Vec<Option<Pipeline>>,
    histories: Vec<RewardHistory<f64>>,
    verdicts: Vec<bool>,
    observed: Vec<f64>,
}

impl ShapingHook {
    pub fn new(pipelines: Vec<Option<Pipeline>>) -> Self {
        let histories = pipelines
            .iter()
            .map(|p| RewardHistory::new(p.as_ref().map_or(0, Pipeline::history_len)))
            .collect();
        let n = pipelines.len();
        ShapingHook {
            pipelines,
            histories,
            verdicts: vec![false; n],
            observed: vec![0.0; n],
        }
    }

    pub fn set_verdicts(&mut self, verdicts: &[bool]) -> Result<(), ShapingError> {
        if verdicts.len() != self.pipelines.len() {
            return Err(ShapingError::LengthMismatch {
                what: "verdicts",
                expected: self.pipelines.len(),
                got: verdicts.len(),
            });
        }
        self.verdicts.copy_from_slice(verdicts);
        Ok(())
    }

    pub fn verdicts(&self) -> &[bool] {
        &self.verdicts
    }

    /// Forget reward histories (episode boundary).
    pub fn reset_histories(&mut self) {
        self.histories.iter_mut().for_each(RewardHistory::clear);
    }
}

impl EpisodeHook for ShapingHook {
    fn on_step(&mut self, record: &StepRecord<'_>, signals: &mut [f64]) {
        for (o, &r) in self.observed.iter_mut().zip(record.raw_rewards) {
            *o = r as f64;
        }
        for (i, signal) in signals.iter_mut().enumerate() {
            let raw = record.raw_rewards[i] as f64;
            if let Some(p) = &self.pipelines[i] {
                let ctx = ShapingContext {
                    history: &self.histories[i],
                    verdicts: &self.verdicts,
                    observed: &self.observed,
                };
                // lengths are fixed at construction
                *signal = p.apply(*signal, &ctx).expect("pipeline lengths match roster");
            }
            self.histories[i].push(raw);
        }
        if record.terminal {
            self.reset_histories();
        }
    }
}
