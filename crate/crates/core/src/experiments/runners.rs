use std::time::Instant;

use num_rational::Rational64;
use rayon::prelude::*;

use super::config::{CorpusSource, ExperimentConfig, Scenario};
use super::report::{
    condition_name, summarize, DetectorMetric, FlagRate, ReturnRow, RunReport, ALL_COMPLIANT,
};
use super::roster::{arrange, slot_to_id, AgentSpec, CapabilityClass, Role};
use super::seeds::{derive_seed, stream};
use super::simulation::{
    simulate, ClassifierDetector, DefectorDetector, NullDetector, QuotaDetector,
    SimulationOutcome, SimulationPlan,
};
use super::ExperimentError;
use crate::detector::{
    build_dataset, length_sweep, synthetic_corpus, train_classifier, BehaviorTrace, Label,
    DEFAULT_TEST_FRACTION,
};
use crate::gametheory::{
    fill_empirical_matrix, is_nash, load_fixture, EgtaPlan, EquilibriumKind, PayoffDocument,
    PayoffMatrix2x2, COMPLY,
};
use crate::shaping::{compose_pipeline, BoycottConfig, Pipeline, ShapingStage};

/// Runs whichever scenario the config names.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    match config.scenario {
        Scenario::Exp1 => run_experiment1(config),
        Scenario::Exp2 => run_experiment2(config),
        Scenario::Egta => run_egta(config),
        Scenario::Detector => run_detector_sweep(config),
    }
}

fn replicate_seeds(c: &ExperimentConfig) -> Vec<u64> {
    (0..c.replicates)
        .map(|r| derive_seed(c.seed, stream::REPLICATE, r as u64))
        .collect()
}

fn empty_report(c: &ExperimentConfig) -> RunReport {
    RunReport {
        config: c.clone(),
        config_hash: c.hash(),
        seeds: replicate_seeds(c),
        rows: Vec::new(),
        summary: Vec::new(),
        counterfactual_avg_c: None,
        flag_rates: Vec::new(),
        detector_metrics: Vec::new(),
        payoff_before: None,
        payoff_after: None,
        wall_clock_seconds: 0.0,
    }
}

fn expect_scenario(c: &ExperimentConfig, s: Scenario) -> Result<(), ExperimentError> {
    if c.scenario != s {
        return Err(ExperimentError::Invalid(format!(
            "config is for {}, not {}",
            c.scenario.as_str(),
            s.as_str()
        )));
    }
    Ok(())
}

/// Compliant pipeline with every boycott stage set to `ratio`.
fn compliant_pipeline(c: &ExperimentConfig, ratio: f64) -> Result<Pipeline, ExperimentError> {
    let stages = c
        .compliant_pipeline
        .iter()
        .map(|s| match s {
            ShapingStage::Boycott(_) => ShapingStage::Boycott(BoycottConfig { ratio }),
            other => other.clone(),
        })
        .collect();
    Ok(compose_pipeline(stages)?)
}

/// Logical roster: defective slots first. exp2 fills strong slots before weak ones.
fn logical_roster(c: &ExperimentConfig) -> Vec<AgentSpec> {
    let defective = c.defective_agents();
    (0..c.agents)
        .map(|slot| AgentSpec {
            role: if slot < defective {
                Role::Defective
            } else {
                Role::Compliant
            },
            class: match c.scenario {
                Scenario::Exp2 | Scenario::Detector if slot < c.strong_agents => {
                    CapabilityClass::Strong
                }
                Scenario::Exp2 | Scenario::Detector => CapabilityClass::Weak,
                _ => CapabilityClass::Standard,
            },
        })
        .collect()
}

/// One condition of one replicate.
struct Job {
    condition: String,
    boycott: Option<f64>,
    replicate: u32,
    roster: Vec<AgentSpec>,
}

fn plan_for(
    c: &ExperimentConfig,
    roster: &[AgentSpec],
    boycott: f64,
    seed: u64,
) -> Result<SimulationPlan, ExperimentError> {
    let pipeline = compliant_pipeline(c, boycott)?;
    Ok(SimulationPlan {
        world: c.grid.world(roster, c.regulation.quota),
        pipelines: roster
            .iter()
            .map(|a| (a.role == Role::Compliant).then(|| pipeline.clone()))
            .collect(),
        encoder: c.encoder.clone(),
        learner: c.learner.clone(),
        exploration: c.exploration.clone(),
        train_episodes: c.train_episodes,
        eval_episodes: c.eval_episodes,
        seed,
    })
}

fn rows_of(job: &Job, out: &SimulationOutcome) -> Vec<ReturnRow> {
    let mut rows = Vec::new();
    for (episode, returns) in out.eval_returns.iter().enumerate() {
        for (agent_id, &ret) in returns.iter().enumerate() {
            rows.push(ReturnRow {
                condition: job.condition.clone(),
                boycott: job.boycott,
                replicate: job.replicate,
                episode: episode as u32,
                agent_id,
                role: job.roster[agent_id].role,
                class: job.roster[agent_id].class,
                ret,
            });
        }
    }
    rows
}

fn flag_rates_of(job: &Job, out: &SimulationOutcome) -> Vec<FlagRate> {
    out.eval_flag_rate
        .iter()
        .enumerate()
        .map(|(agent_id, &rate)| FlagRate {
            condition: job.condition.clone(),
            replicate: job.replicate,
            agent_id,
            role: job.roster[agent_id].role,
            rate,
        })
        .collect()
}

/// The all-compliant counterfactual plus one condition per boycott ratio,
/// for every replicate. All conditions of a replicate share world, learner
/// and role-placement seeds.
fn jobs(c: &ExperimentConfig) -> Vec<Job> {
    let logical = logical_roster(c);
    let mut out = Vec::new();
    for r in 0..c.replicates {
        let ids = slot_to_id(c.seed, r as u64, c.agents);
        let roster = arrange(&logical, &ids);
        let all_c: Vec<AgentSpec> = roster
            .iter()
            .map(|a| AgentSpec {
                role: Role::Compliant,
                class: a.class,
            })
            .collect();
        out.push(Job {
            condition: ALL_COMPLIANT.into(),
            boycott: None,
            replicate: r,
            roster: all_c,
        });
        for &b in &c.boycott {
            out.push(Job {
                condition: condition_name(b),
                boycott: Some(b),
                replicate: r,
                roster: roster.clone(),
            });
        }
    }
    out
}

fn run_jobs(
    c: &ExperimentConfig,
    jobs: Vec<Job>,
    detector_for: impl Fn(u32) -> Box<dyn DefectorDetector> + Sync,
) -> Result<(Vec<ReturnRow>, Vec<FlagRate>), ExperimentError> {
    let results = jobs
        .par_iter()
        .map(|job| {
            let seed = derive_seed(c.seed, stream::REPLICATE, job.replicate as u64);
            let plan = plan_for(c, &job.roster, job.boycott.unwrap_or(0.0), seed)?;
            let out = simulate(&plan, detector_for(job.replicate).as_ref())?;
            Ok((rows_of(job, &out), flag_rates_of(job, &out)))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut rows = Vec::new();
    let mut flags = Vec::new();
    for (r, f) in results {
        rows.extend(r);
        flags.extend(f);
    }
    Ok((rows, flags))
}

fn finish(mut report: RunReport, rows: Vec<ReturnRow>, started: Instant) -> RunReport {
    report.summary = summarize(&rows);
    report.counterfactual_avg_c = report
        .summary
        .iter()
        .find(|s| s.condition == ALL_COMPLIANT)
        .and_then(|s| s.avg_c);
    report.rows = rows;
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    report
}

/// Equal-capability roster under the per-step quota, rule detector and boycott.
pub fn run_experiment1(c: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    expect_scenario(c, Scenario::Exp1)?;
    let started = Instant::now();
    let quota = c.regulation.quota;
    let (rows, flags) = run_jobs(c, jobs(c), |_| Box::new(QuotaDetector { quota }))?;
    let mut report = empty_report(c);
    report.flag_rates = flags;
    Ok(finish(report, rows, started))
}

/// Greedy evaluation traces of the exp2 roster trained without boycott,
/// labelled by role. Each episode contributes its defective traces and as
/// many compliant ones (taken in rotation), so the classes are balanced.
/// Used to fit the exp2 detector and as the simulated corpus.
fn probe_traces(
    c: &ExperimentConfig,
    replicate: u32,
) -> Result<Vec<(BehaviorTrace, Label)>, ExperimentError> {
    let ids = slot_to_id(c.seed, replicate as u64, c.agents);
    let roster = arrange(&logical_roster(c), &ids);
    let seed = derive_seed(c.seed, stream::DETECTOR, replicate as u64);
    let out = simulate(&plan_for(c, &roster, 0.0, seed)?, &NullDetector)?;
    let mut corpus = Vec::new();
    let mut turn = 0;
    for episode in out.eval_traces {
        let (def, comp): (Vec<_>, Vec<_>) = episode
            .into_iter()
            .partition(|t| roster[t.agent_id].role == Role::Defective);
        for t in def {
            if !comp.is_empty() {
                corpus.push((comp[turn % comp.len()].clone(), Label::Compliant));
                turn += 1;
            }
            corpus.push((t, Label::Defective));
        }
    }
    Ok(corpus)
}

/// Strong and weak agents under the windowed threshold regulation; the
/// detector is a classifier fitted per replicate to probe traces.
pub fn run_experiment2(c: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    expect_scenario(c, Scenario::Exp2)?;
    let started = Instant::now();
    let mut report = empty_report(c);
    let detectors: Vec<Option<ClassifierDetector>> = if c.defective_agents() == 0 {
        vec![None; c.replicates as usize]
    } else {
        let fitted = (0..c.replicates)
            .into_par_iter()
            .map(|r| {
                let corpus = probe_traces(c, r)?;
                let ds = build_dataset(
                    &corpus,
                    c.detector.window,
                    DEFAULT_TEST_FRACTION,
                    derive_seed(c.seed, stream::DETECTOR, r as u64),
                )?;
                let (model, acc) = train_classifier::<f64>(
                    &ds,
                    &c.detector.train,
                    derive_seed(c.seed, stream::DETECTOR, 1000 + r as u64),
                )?;
                Ok((ClassifierDetector { model }, acc))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        fitted
            .into_iter()
            .map(|(d, acc)| {
                report.detector_metrics.push(DetectorMetric {
                    length: c.detector.window,
                    train_acc: acc.train_accuracy,
                    test_acc: acc.test_accuracy,
                });
                Some(d)
            })
            .collect()
    };
    let (rows, flags) = run_jobs(c, jobs(c), |r| match &detectors[r as usize] {
        Some(d) => Box::new(d.clone()),
        None => Box::new(NullDetector),
    })?;
    report.flag_rates = flags;
    Ok(finish(report, rows, started))
}

fn egta_plan(c: &ExperimentConfig, boycott: f64) -> EgtaPlan {
    EgtaPlan {
        grid: c.grid.clone(),
        background: c.agents - 2,
        boycott,
        quota: c.regulation.quota,
        encoder: c.encoder.clone(),
        learner: c.learner.clone(),
        exploration: c.exploration.clone(),
        train_episodes: c.train_episodes,
        eval_episodes: c.eval_episodes,
        gamma: c.egta.gamma,
        seed: c.seed,
        replicates: c.replicates,
    }
}

/// Classification of the (C, C) profile with exact arithmetic when the
/// payoffs came from a fixture.
pub fn exact_cc_kind(m: &PayoffMatrix2x2<Rational64>) -> EquilibriumKind {
    is_nash(&m.to_game(), &[COMPLY, COMPLY])
        .expect("valid profile")
        .kind
}

/// Empirical payoff matrices without (B = 0) and with the configured boycott.
/// With a fixture file the matrices are read instead of simulated.
pub fn run_egta(c: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    expect_scenario(c, Scenario::Egta)?;
    let started = Instant::now();
    let mut report = empty_report(c);
    if let Some(path) = &c.egta.fixture {
        let fx = load_fixture(path)?;
        // exact parse validates the decimals even though documents hold f64
        fx.before.to_exact()?;
        fx.after.to_exact()?;
        report.seeds.clear();
        report.payoff_before = Some(PayoffDocument::new(&fx.before.to_f64(), 0.0, 0, vec![]));
        report.payoff_after = Some(PayoffDocument::new(
            &fx.after.to_f64(),
            c.egta.boycott,
            0,
            vec![],
        ));
        report.wall_clock_seconds = started.elapsed().as_secs_f64();
        return Ok(report);
    }
    let mut rows = Vec::new();
    for (tag, b) in [("before", 0.0), ("after", c.egta.boycott)] {
        let m = fill_empirical_matrix(&egta_plan(c, b))?;
        for run in &m.runs {
            for (episode, returns) in run.returns.iter().enumerate() {
                for (agent_id, &ret) in returns.iter().enumerate() {
                    rows.push(ReturnRow {
                        condition: format!("{tag}:{}{}", run.row, run.col),
                        boycott: Some(b),
                        replicate: run.replicate,
                        episode: episode as u32,
                        agent_id,
                        role: run.roles[agent_id],
                        class: CapabilityClass::Standard,
                        ret,
                    });
                }
            }
        }
        let doc = PayoffDocument::new(&m.matrix, b, c.eval_episodes, report.seeds.clone());
        if tag == "before" {
            report.payoff_before = Some(doc);
        } else {
            report.payoff_after = Some(doc);
        }
    }
    report.summary = summarize(&rows);
    report.rows = rows;
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Detector accuracy against window length on one fixed corpus split.
pub fn run_detector_sweep(c: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    expect_scenario(c, Scenario::Detector)?;
    let started = Instant::now();
    let mut report = empty_report(c);
    let corpus = match c.detector.source {
        CorpusSource::Synthetic => synthetic_corpus(
            c.detector.corpus_traces,
            c.detector.trace_length,
            derive_seed(c.seed, stream::CORPUS, 0),
        ),
        CorpusSource::Simulated => {
            let per: Vec<_> = (0..c.replicates)
                .into_par_iter()
                .map(|r| probe_traces(c, r))
                .collect::<Result<_, _>>()?;
            per.into_iter().flatten().collect()
        }
    };
    let points = length_sweep(
        &corpus,
        &c.detector.lengths,
        &c.detector.train,
        derive_seed(c.seed, stream::SWEEP, 0),
    )?;
    report.detector_metrics = points.into_iter().map(DetectorMetric::from).collect();
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}
