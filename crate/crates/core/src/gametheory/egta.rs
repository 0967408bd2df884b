use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::game::{PayoffMatrix2x2, COMPLY, DEFECT};
use super::nash::{enforcement_holds, pure_nash_set, EquilibriumKind};
use crate::experiments::{
    arrange, derive_seed, rollout, simulate, slot_to_id, stream, AgentSpec, CapabilityClass,
    ExperimentError, ExplorationParams, GridSpec, QuotaDetector, Role, SimulationPlan,
};
use crate::detector::BehaviorTrace;
use crate::gridworld::{Policy, WorldConfig};
use crate::learner::{FeatureEncoder, LearnerParams};
use crate::shaping::{compose_pipeline, BoycottConfig, ShapingStage};

/// Mean per-agent (optionally discounted) episode return.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscountedReturnEstimate {
    pub means: Vec<f64>,
    pub episodes: u32,
    pub gamma: f64,
}

/// Rolls out frozen policies and averages their returns. With `gamma = 1`
/// this is the mean raw apple count.
pub fn estimate_return(
    world: &WorldConfig,
    flags: &[bool],
    policies: &mut [&mut dyn Policy],
    episodes: u32,
    gamma: f64,
    seed: u64,
) -> Result<DiscountedReturnEstimate, ExperimentError> {
    if episodes == 0 {
        return Err(ExperimentError::Invalid("episodes must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ExperimentError::Invalid(format!("discount {gamma} outside [0, 1]")));
    }
    let traces: Vec<Vec<BehaviorTrace>> = rollout(world, flags, policies, episodes, seed)?
        .into_iter()
        .map(|o| o.traces)
        .collect();
    let means = discounted_means(&traces, policies.len(), gamma);
    Ok(DiscountedReturnEstimate {
        means,
        episodes,
        gamma,
    })
}

fn discounted_means(traces: &[Vec<BehaviorTrace>], n: usize, gamma: f64) -> Vec<f64> {
    let mut means = vec![0.0; n];
    for episode in traces {
        for (m, t) in means.iter_mut().zip(episode) {
            *m += t
                .entries()
                .iter()
                .rev()
                .fold(0.0, |acc, e| e.raw_reward as f64 + gamma * acc);
        }
    }
    let k = traces.len().max(1) as f64;
    means.iter_mut().for_each(|m| *m /= k);
    means
}

/// Two focal players choose C or D; the background agents always comply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgtaPlan {
    pub grid: GridSpec,
    pub background: usize,
    pub boycott: f64,
    pub quota: u32,
    pub encoder: FeatureEncoder,
    pub learner: LearnerParams,
    pub exploration: ExplorationParams,
    pub train_episodes: u32,
    pub eval_episodes: u32,
    /// Discount applied to payoffs; 1 counts raw apples.
    pub gamma: f64,
    /// Master seed; replicate `r` of every cell shares its derived seeds.
    pub seed: u64,
    pub replicates: u32,
}

pub const FOCAL_PLAYERS: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRun {
    pub row: String,
    pub col: String,
    pub replicate: u32,
    pub seed: u64,
    pub focal_ids: [usize; 2],
    pub roles: Vec<Role>,
    pub estimate: DiscountedReturnEstimate,
    /// `returns[episode][agent]` behind the estimate.
    pub returns: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMatrix {
    pub matrix: PayoffMatrix2x2<f64>,
    pub runs: Vec<CellRun>,
}

fn label(s: usize) -> &'static str {
    if s == COMPLY {
        "C"
    } else {
        "D"
    }
}

impl EgtaPlan {
    fn run_cell(&self, row: usize, col: usize, replicate: u32) -> Result<CellRun, ExperimentError> {
        let n = FOCAL_PLAYERS + self.background;
        let seed = derive_seed(self.seed, stream::REPLICATE, replicate as u64);
        let role = |s| if s == COMPLY { Role::Compliant } else { Role::Defective };
        let mut slots = vec![role(row), role(col)];
        slots.extend(std::iter::repeat(Role::Compliant).take(self.background));
        let ids = slot_to_id(self.seed, replicate as u64, n);
        let roles = arrange(&slots, &ids);
        let roster: Vec<AgentSpec> = roles
            .iter()
            .map(|&role| AgentSpec {
                role,
                class: CapabilityClass::Standard,
            })
            .collect();
        let boycott = compose_pipeline(vec![ShapingStage::Boycott(BoycottConfig {
            ratio: self.boycott,
        })])?;
        let plan = SimulationPlan {
            world: self.grid.world(&roster, self.quota),
            pipelines: roles
                .iter()
                .map(|&r| (r == Role::Compliant).then(|| boycott.clone()))
                .collect(),
            encoder: self.encoder.clone(),
            learner: self.learner.clone(),
            exploration: self.exploration.clone(),
            train_episodes: self.train_episodes,
            eval_episodes: self.eval_episodes,
            seed,
        };
        let out = simulate(&plan, &QuotaDetector { quota: self.quota })?;
        let means = discounted_means(&out.eval_traces, n, self.gamma);
        Ok(CellRun {
            row: label(row).into(),
            col: label(col).into(),
            replicate,
            seed,
            focal_ids: [ids[0], ids[1]],
            roles,
            estimate: DiscountedReturnEstimate {
                means,
                episodes: self.eval_episodes,
                gamma: self.gamma,
            },
            returns: out.eval_returns,
        })
    }
}

/// Trains and evaluates every (cell, replicate) independently, then averages
/// focal payoffs per cell.
pub fn fill_empirical_matrix(plan: &EgtaPlan) -> Result<EmpiricalMatrix, ExperimentError> {
    if !(0.0..=1.0).contains(&plan.gamma) {
        return Err(ExperimentError::Invalid(format!("discount {} outside [0, 1]", plan.gamma)));
    }
    if plan.eval_episodes == 0 || plan.replicates == 0 {
        return Err(ExperimentError::Invalid(
            "EGTA needs at least one evaluation episode and one replicate".into(),
        ));
    }
    let jobs: Vec<(usize, usize, u32)> = [COMPLY, DEFECT]
        .into_iter()
        .flat_map(|r| [COMPLY, DEFECT].into_iter().map(move |c| (r, c)))
        .flat_map(|(r, c)| (0..plan.replicates).map(move |k| (r, c, k)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(r, c, k)| {
            plan.run_cell(r, c, k).map_err(|e| {
                ExperimentError::Invalid(format!("cell ({}, {}) replicate {k}: {e}", label(r), label(c)))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut cells = [[(0.0, 0.0); 2]; 2];
    for run in &runs {
        let (r, c) = (
            (run.row == "D") as usize,
            (run.col == "D") as usize,
        );
        let m = &run.estimate.means;
        cells[r][c].0 += m[run.focal_ids[0]] / plan.replicates as f64;
        cells[r][c].1 += m[run.focal_ids[1]] / plan.replicates as f64;
    }
    Ok(EmpiricalMatrix {
        matrix: PayoffMatrix2x2 { cells },
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellDocument {
    pub row: String,
    pub col: String,
    pub payoffs: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumDocument {
    pub profile: [String; 2],
    pub kind: EquilibriumKind,
}

/// Stable on-disk form of a 2×2 payoff matrix with its analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffDocument {
    pub strategies: [String; 2],
    pub boycott: f64,
    pub cells: Vec<CellDocument>,
    pub equilibria: Vec<EquilibriumDocument>,
    pub enforcement_holds: bool,
    pub margins: [f64; 2],
    pub episodes_per_cell: u32,
    pub seeds: Vec<u64>,
}

impl PayoffDocument {
    pub fn new(
        matrix: &PayoffMatrix2x2<f64>,
        boycott: f64,
        episodes_per_cell: u32,
        seeds: Vec<u64>,
    ) -> Self {
        let game = matrix.to_game();
        let e = enforcement_holds(&game, "C", "D").expect("2x2 games label C and D");
        let mut cells = Vec::new();
        for (r, row) in matrix.cells.iter().enumerate() {
            for (c, &(a, b)) in row.iter().enumerate() {
                cells.push(CellDocument {
                    row: label(r).into(),
                    col: label(c).into(),
                    payoffs: [a, b],
                });
            }
        }
        PayoffDocument {
            strategies: ["C".into(), "D".into()],
            boycott,
            cells,
            equilibria: pure_nash_set(&game)
                .into_iter()
                .map(|c| EquilibriumDocument {
                    profile: [label(c.profile[0]).into(), label(c.profile[1]).into()],
                    kind: c.kind,
                })
                .collect(),
            enforcement_holds: e.holds,
            margins: [e.margins[0], e.margins[1]],
            episodes_per_cell,
            seeds,
        }
    }
}
