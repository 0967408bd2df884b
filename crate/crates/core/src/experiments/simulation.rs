use serde::{Deserialize, Serialize};

use super::seeds::{derive_seed, stream};
use super::ExperimentError;
use crate::detector::{quota_detect, sigmoid, BehaviorTrace, SequenceClassifier};
use crate::gridworld::{run_episode, EpisodeOutcome, GridWorld, Policy, WorldConfig};
use crate::learner::{EpsilonSchedule, FeatureEncoder, LearnerParams, LearningAgent, Mode, LinearQ};
use crate::shaping::{Pipeline, ShapingHook};

/// Produces public Defective flags from the traces of the episode that just ended.
pub trait DefectorDetector: Send + Sync {
    fn detect(&self, traces: &[BehaviorTrace]) -> Vec<bool>;
}

/// Nobody is ever flagged.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullDetector;

impl DefectorDetector for NullDetector {
    fn detect(&self, traces: &[BehaviorTrace]) -> Vec<bool> {
        vec![false; traces.len()]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuotaDetector {
    pub quota: u32,
}

impl DefectorDetector for QuotaDetector {
    fn detect(&self, traces: &[BehaviorTrace]) -> Vec<bool> {
        traces.iter().map(|t| quota_detect(t, self.quota).flagged).collect()
    }
}

/// Learned classifier applied to consecutive reward windows of the episode.
/// Window log-odds are averaged, so an agent is flagged when the windows
/// jointly favour Defective.
#[derive(Clone, Debug)]
pub struct ClassifierDetector {
    pub model: SequenceClassifier<f64>,
}

impl ClassifierDetector {
    /// `sigmoid(mean window logit)`; 0 when the trace is shorter than one window.
    pub fn confidence(&self, trace: &BehaviorTrace) -> f64 {
        let rewards = trace.rewards();
        let windows: Vec<&[u32]> = rewards.chunks_exact(self.model.length).collect();
        if windows.is_empty() {
            return 0.0;
        }
        let total: f64 = windows
            .iter()
            .map(|w| self.model.logit(w).expect("window has model length"))
            .sum();
        sigmoid(total / windows.len() as f64)
    }
}

impl DefectorDetector for ClassifierDetector {
    fn detect(&self, traces: &[BehaviorTrace]) -> Vec<bool> {
        traces
            .iter()
            .map(|t| self.confidence(t) > self.model.threshold)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationParams {
    pub start: f64,
    pub end: f64,
    /// Fraction of training episodes over which epsilon decays linearly.
    pub decay_fraction: f64,
}

impl Default for ExplorationParams {
    fn default() -> Self {
        ExplorationParams {
            start: 1.0,
            end: 0.05,
            decay_fraction: 0.6,
        }
    }
}

/// One training-then-evaluation run of a fixed roster.
#[derive(Clone, Debug)]
pub struct SimulationPlan {
    pub world: WorldConfig,
    /// Per agent; `None` learns from raw rewards.
    pub pipelines: Vec<Option<Pipeline>>,
    pub encoder: FeatureEncoder,
    pub learner: LearnerParams,
    pub exploration: ExplorationParams,
    pub train_episodes: u32,
    pub eval_episodes: u32,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    /// `eval_returns[episode][agent]`, raw apple counts under greedy policies.
    pub eval_returns: Vec<Vec<u64>>,
    /// Traces of every evaluation episode, `eval_traces[episode][agent]`.
    pub eval_traces: Vec<Vec<BehaviorTrace>>,
    /// Flags in force during evaluation, i.e. the verdicts on the last training episode.
    pub frozen_flags: Vec<bool>,
    /// Per agent, fraction of evaluation episodes on which the detector flags it.
    pub eval_flag_rate: Vec<f64>,
    pub learners: Vec<LinearQ<f64>>,
}

impl SimulationPlan {
    pub fn agent_count(&self) -> usize {
        self.world.capabilities.len()
    }

    fn schedule(&self) -> Result<EpsilonSchedule, ExperimentError> {
        let until = (self.train_episodes as f64 * self.exploration.decay_fraction).round() as u64;
        Ok(EpsilonSchedule::linear(
            self.exploration.start,
            self.exploration.end,
            until,
        )?)
    }
}

pub fn simulate(
    plan: &SimulationPlan,
    detector: &dyn DefectorDetector,
) -> Result<SimulationOutcome, ExperimentError> {
    let n = plan.agent_count();
    if plan.pipelines.len() != n {
        return Err(ExperimentError::Invalid(format!(
            "{} pipelines for {} agents",
            plan.pipelines.len(),
            n
        )));
    }
    let schedule = plan.schedule()?;
    let mut learners: Vec<LearningAgent<LinearQ<f64>>> = (0..n)
        .map(|i| {
            LearningAgent::new(
                LinearQ::with_initial_value(plan.encoder.clone(), plan.learner.initial_value),
                plan.learner.clone(),
                schedule.clone(),
                derive_seed(plan.seed, stream::LEARNER, i as u64),
            )
        })
        .collect();
    let mut hook = ShapingHook::new(plan.pipelines.clone());
    let mut flags = vec![false; n];

    for episode in 0..plan.train_episodes {
        let mut world = GridWorld::new(
            &plan.world,
            derive_seed(plan.seed, stream::TRAIN_WORLD, episode as u64),
        )?;
        world.set_public_flags(&flags)?;
        hook.set_verdicts(&flags)?;
        hook.reset_histories();
        for l in learners.iter_mut() {
            l.set_clock(episode as u64);
        }
        let mut policies: Vec<&mut dyn Policy> =
            learners.iter_mut().map(|l| l as &mut dyn Policy).collect();
        let outcome = run_episode(&mut world, &mut policies, &mut [&mut hook])?;
        flags = detector.detect(&outcome.traces);
    }

    for l in learners.iter_mut() {
        l.set_mode(Mode::Greedy);
    }
    let mut policies: Vec<&mut dyn Policy> =
        learners.iter_mut().map(|l| l as &mut dyn Policy).collect();
    let outcomes = rollout(
        &plan.world,
        &flags,
        &mut policies,
        plan.eval_episodes,
        derive_seed(plan.seed, stream::EVAL_WORLD, 0),
    )?;
    let mut eval_flag_rate = vec![0.0; n];
    for o in &outcomes {
        for (r, f) in eval_flag_rate.iter_mut().zip(detector.detect(&o.traces)) {
            *r += f as u8 as f64;
        }
    }
    eval_flag_rate
        .iter_mut()
        .for_each(|r| *r /= outcomes.len().max(1) as f64);
    let (eval_returns, eval_traces) = outcomes.into_iter().map(|o| (o.returns, o.traces)).unzip();

    Ok(SimulationOutcome {
        eval_returns,
        eval_traces,
        frozen_flags: flags,
        eval_flag_rate,
        learners: learners
            .into_iter()
            .map(LearningAgent::into_approximator)
            .collect(),
    })
}

/// Plays `episodes` episodes with fixed public flags and no learning hooks.
/// Episode `k` uses world seed `derive_seed(seed, EVAL_WORLD, k)`.
pub fn rollout(
    world: &WorldConfig,
    flags: &[bool],
    policies: &mut [&mut dyn Policy],
    episodes: u32,
    seed: u64,
) -> Result<Vec<EpisodeOutcome>, ExperimentError> {
    (0..episodes)
        .map(|k| {
            let mut w = GridWorld::new(world, derive_seed(seed, stream::EVAL_WORLD, k as u64))?;
            w.set_public_flags(flags)?;
            Ok(run_episode(&mut w, policies, &mut [])?)
        })
        .collect()
}
