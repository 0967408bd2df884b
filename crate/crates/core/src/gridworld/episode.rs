use super::action::Action;
use super::observation::Observation;
use super::world::GridWorld;
use super::WorldError;
use crate::detector::BehaviorTrace;

/// Maps observations to actions. Learning policies also receive feedback.
pub trait Policy {
    fn act(&mut self, observation: &Observation) -> Action;

    fn feedback(&mut self, _feedback: &Feedback<'_>) {}
}

/// One agent's view of a completed step, with its learning signal.
#[derive(Debug)]
pub struct Feedback<'a> {
    pub observation: &'a Observation,
    pub action: Action,
    pub raw_reward: u32,
    pub signal: f64,
    pub next_observation: &'a Observation,
    pub terminal: bool,
}

/// Everything that happened in one step.
#[derive(Debug)]
pub struct StepRecord<'a> {
    /// Index of the step before it was applied.
    pub step: u32,
    pub observations: &'a [Observation],
    pub actions: &'a [Action],
    pub raw_rewards: &'a [u32],
    pub terminal: bool,
}

/// Per-step observer. `signals` starts as the raw rewards; hooks run in order
/// and may rewrite it. Policies receive the final values.
pub trait EpisodeHook {
    fn on_step(&mut self, _record: &StepRecord<'_>, _signals: &mut [f64]) {}
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeOutcome {
    pub returns: Vec<u64>,
    pub traces: Vec<BehaviorTrace>,
}

/// Roll the world forward until its episode length is reached.
pub fn run_episode(
    world: &mut GridWorld,
    policies: &mut [&mut dyn Policy],
    hooks: &mut [&mut dyn EpisodeHook],
) -> Result<EpisodeOutcome, WorldError> {
    let n = world.agents().len();
    if policies.len() != n {
        return Err(WorldError::ActionCount {
            expected: n,
            got: policies.len(),
        });
    }
    let mut traces: Vec<BehaviorTrace> = (0..n).map(BehaviorTrace::new).collect();
    let mut observations = (0..n)
        .map(|i| world.observe(i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut actions = Vec::with_capacity(n);
    let mut signals = vec![0.0; n];

    while !world.is_done() {
        let step = world.step_index();
        actions.clear();
        actions.extend(
            policies
                .iter_mut()
                .zip(&observations)
                .map(|(p, o)| p.act(o)),
        );
        let raw = world.step(&actions)?;
        let terminal = world.is_done();
        let next = (0..n)
            .map(|i| world.observe(i))
            .collect::<Result<Vec<_>, _>>()?;

        for (s, &r) in signals.iter_mut().zip(&raw) {
            *s = r as f64;
        }
        let record = StepRecord {
            step,
            observations: &observations,
            actions: &actions,
            raw_rewards: &raw,
            terminal,
        };
        for hook in hooks.iter_mut() {
            hook.on_step(&record, &mut signals);
        }
        for i in 0..n {
            traces[i].push(step, actions[i], raw[i]);
            policies[i].feedback(&Feedback {
                observation: &observations[i],
                action: actions[i],
                raw_reward: raw[i],
                signal: signals[i],
                next_observation: &next[i],
                terminal,
            });
        }
        observations = next;
    }

    Ok(EpisodeOutcome {
        returns: world.agents().iter().map(|a| a.episode_return).collect(),
        traces,
    })
}

/// Always the same action.
#[derive(Clone, Copy, Debug)]
pub struct ConstantPolicy(pub Action);

impl Policy for ConstantPolicy {
    fn act(&mut self, _observation: &Observation) -> Action {
        self.0
    }
}

/// Replays a fixed action list, then idles.
#[derive(Clone, Debug)]
pub struct ScriptedPolicy {
    script: Vec<Action>,
    cursor: usize,
}

impl ScriptedPolicy {
    pub fn new(script: Vec<Action>) -> Self {
        ScriptedPolicy { script, cursor: 0 }
    }
}

impl Policy for ScriptedPolicy {
    fn act(&mut self, _observation: &Observation) -> Action {
        let a = self.script.get(self.cursor).copied().unwrap_or(Action::NOOP);
        self.cursor += 1;
        a
    }
}

#[cfg(test)]
mod tests {
    use super::super::world::tests::{config, scripted};
    use super::super::world::Cell;
    use super::*;

    #[test]
    fn noop_policies_return_zero() {
        let mut w = GridWorld::new(&config(10, 10, &[3, 3, 5], 4), 11).unwrap();
        let mut p: Vec<ConstantPolicy> = vec![ConstantPolicy(Action::NOOP); 3];
        let mut refs: Vec<&mut dyn Policy> = p.iter_mut().map(|p| p as &mut dyn Policy).collect();
        let out = run_episode(&mut w, &mut refs, &mut []).unwrap();
        assert_eq!(out.returns, vec![0, 0, 0]);
        assert!(out.traces.iter().all(|t| t.len() == 10));
    }

    #[test]
    fn scripted_single_gather() {
        let mut w = scripted(6, 6, &[(Cell::new(1, 1), 3)], &[Cell::new(2, 1)], &[]);
        let mut p = ScriptedPolicy::new(vec![Action::gather(1, 0).unwrap()]);
        let out = run_episode(&mut w, &mut [&mut p], &mut []).unwrap();
        assert_eq!(out.returns, vec![3]);
        assert_eq!(out.traces[0].rewards()[0], 3);
    }

    struct Doubler;
    impl EpisodeHook for Doubler {
        fn on_step(&mut self, _r: &StepRecord<'_>, signals: &mut [f64]) {
            signals.iter_mut().for_each(|s| *s *= 2.0);
        }
    }

    struct Recorder(Vec<f64>);
    impl Policy for Recorder {
        fn act(&mut self, _o: &Observation) -> Action {
            Action::gather(1, 0).unwrap()
        }
        fn feedback(&mut self, f: &Feedback<'_>) {
            self.0.push(f.signal);
        }
    }

    #[test]
    fn hooks_rewrite_signals_but_not_returns() {
        let mut w = scripted(6, 6, &[(Cell::new(1, 1), 3)], &[Cell::new(2, 1)], &[]);
        let mut p = Recorder(vec![]);
        let out = run_episode(&mut w, &mut [&mut p], &mut [&mut Doubler]).unwrap();
        assert_eq!(p.0[0], 6.0);
        assert_eq!(p.0[1], 6.0);
        assert_eq!(out.returns[0], 6);
    }
}
