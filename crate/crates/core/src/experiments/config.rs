use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::roster::{compliant_count, GridSpec};
use super::simulation::ExplorationParams;
use crate::detector::{TrainParams, DEFAULT_HIDDEN};
use crate::gridworld::Cell;
use crate::learner::{FeatureEncoder, LearnerParams};
use crate::shaping::{compose_pipeline, ShapingStage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Exp1,
    Exp2,
    Egta,
    Detector,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Exp1 => "exp1",
            Scenario::Exp2 => "exp2",
            Scenario::Egta => "egta",
            Scenario::Detector => "detector",
        }
    }
}

/// Which set of defaults fills keys the file leaves out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    /// I.i.d. reward traces with known labels.
    Synthetic,
    /// Greedy traces of agents trained in the exp2 setting without boycott.
    Simulated,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

// ---- file schema: every key optional except the scenario ----

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    width: Option<i32>,
    height: Option<i32>,
    trees: Option<usize>,
    walls: Option<Vec<[i32; 2]>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegulation {
    quota: Option<u32>,
    tau: Option<f64>,
    window: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLearner {
    alpha: Option<f64>,
    gamma: Option<f64>,
    batch_size: Option<usize>,
    replay_capacity: Option<usize>,
    initial_value: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExploration {
    start: Option<f64>,
    end: Option<f64>,
    decay_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    lengths: Option<Vec<usize>>,
    window: Option<usize>,
    epochs: Option<u32>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    hidden: Option<Vec<usize>>,
    corpus_traces: Option<usize>,
    trace_length: Option<usize>,
    source: Option<CorpusSource>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEgta {
    boycott: Option<f64>,
    gamma: Option<f64>,
    fixture: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Scenario,
    seed: Option<u64>,
    out: Option<PathBuf>,
    replicates: Option<u32>,
    agents: Option<usize>,
    compliance: Option<f64>,
    strong_agents: Option<usize>,
    boycott: Option<Vec<f64>>,
    train_episodes: Option<u32>,
    eval_episodes: Option<u32>,
    episode_length: Option<u32>,
    compliant_pipeline: Option<Vec<ShapingStage>>,
    encoder: Option<FeatureEncoder>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    regulation: RawRegulation,
    #[serde(default)]
    learner: RawLearner,
    #[serde(default)]
    exploration: RawExploration,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    egta: RawEgta,
}

// ---- resolved configuration ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regulation {
    /// Per-step harvest quota checked by the rule detector.
    pub quota: u32,
    pub tau: f64,
    pub window: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSettings {
    pub lengths: Vec<usize>,
    /// Window length of the classifier used inside exp2.
    pub window: usize,
    pub train: TrainParams,
    /// Traces per class in the sweep corpus.
    pub corpus_traces: usize,
    pub trace_length: usize,
    pub source: CorpusSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgtaSettings {
    pub boycott: f64,
    pub gamma: f64,
    pub fixture: Option<PathBuf>,
}

/// Fully resolved experiment description; every default is explicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub scale: Scale,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Independent repetitions, each with its own derived seeds.
    pub replicates: u32,
    pub grid: GridSpec,
    pub agents: usize,
    /// Fraction M of compliant agents; `floor(M · agents)` comply.
    pub compliance: f64,
    /// exp2 only: how many agents are strong; the rest are weak.
    pub strong_agents: usize,
    /// Boycott ratios swept in exp1/exp2.
    pub boycott: Vec<f64>,
    pub train_episodes: u32,
    pub eval_episodes: u32,
    pub regulation: Regulation,
    /// Shaping stages of compliant agents; any boycott stage takes the swept ratio.
    pub compliant_pipeline: Vec<ShapingStage>,
    pub encoder: FeatureEncoder,
    pub learner: LearnerParams,
    pub exploration: ExplorationParams,
    pub detector: DetectorSettings,
    pub egta: EgtaSettings,
}

/// Values the command line may supply on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn compliant_agents(&self) -> usize {
        compliant_count(self.compliance, self.agents)
    }

    pub fn defective_agents(&self) -> usize {
        self.agents - self.compliant_agents()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(json))
    }
}

/// Parses with paper-scale defaults.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(path, Scale::Paper, &Overrides::default())
}

pub fn parse_config_with(
    path: &Path,
    scale: Scale,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut config = parse_config_str(&text, scale, overrides)?;
    // relative fixture paths are taken from the config file's directory
    if let (Some(fx), Some(dir)) = (&config.egta.fixture, path.parent()) {
        if fx.is_relative() {
            config.egta.fixture = Some(dir.join(fx));
        }
    }
    Ok(config)
}

pub fn parse_config_str(
    text: &str,
    scale: Scale,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    resolve(raw, scale, overrides)
}

fn pick<T>(desk: bool, d: T, p: T) -> T {
    if desk {
        d
    } else {
        p
    }
}

fn resolve(raw: RawConfig, scale: Scale, ov: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let desk = scale == Scale::Desk;
    let scenario = raw.scenario;
    let seed = ov.seed.or(raw.seed).ok_or(ConfigError::Missing("seed"))?;

    let default_agents = match scenario {
        Scenario::Egta => pick(desk, 6, 10),
        _ => 5,
    };
    let regulation = Regulation {
        quota: raw.regulation.quota.unwrap_or(3),
        tau: raw.regulation.tau.unwrap_or(2.0),
        window: raw.regulation.window.unwrap_or(3),
    };
    let default_pipeline = match scenario {
        Scenario::Exp2 => vec![
            ShapingStage::Threshold(crate::shaping::ThresholdRegulation {
                tau: regulation.tau,
                window: regulation.window,
            }),
            ShapingStage::Boycott(crate::shaping::BoycottConfig { ratio: 0.0 }),
        ],
        _ => vec![ShapingStage::Boycott(crate::shaping::BoycottConfig { ratio: 0.0 })],
    };
    let l = raw.learner;
    let d = LearnerParams::default();
    let e = raw.exploration;
    let de = ExplorationParams::default();
    let dt = raw.detector;
    let cfg = ExperimentConfig {
        scenario,
        scale,
        seed,
        out: ov.out.clone().or(raw.out),
        replicates: raw.replicates.unwrap_or(5),
        grid: GridSpec {
            width: raw.grid.width.unwrap_or(pick(desk, 12, 20)),
            height: raw.grid.height.unwrap_or(pick(desk, 12, 20)),
            walls: raw
                .grid
                .walls
                .unwrap_or_default()
                .into_iter()
                .map(|[x, y]| Cell { x, y })
                .collect(),
            trees: raw.grid.trees.unwrap_or(pick(desk, 4, 10)),
            episode_length: raw.episode_length.unwrap_or(pick(desk, 200, 1000)),
        },
        agents: raw.agents.unwrap_or(default_agents),
        compliance: raw.compliance.unwrap_or(0.8),
        strong_agents: raw.strong_agents.unwrap_or(2),
        boycott: raw.boycott.unwrap_or_else(|| vec![0.0, 1.0, 2.0]),
        train_episodes: raw.train_episodes.unwrap_or(pick(desk, 2000, 30000)),
        eval_episodes: raw.eval_episodes.unwrap_or(pick(desk, 50, 100)),
        regulation,
        compliant_pipeline: raw.compliant_pipeline.unwrap_or(default_pipeline),
        encoder: raw.encoder.unwrap_or_default(),
        learner: LearnerParams {
            alpha: l.alpha.unwrap_or(d.alpha),
            gamma: l.gamma.unwrap_or(d.gamma),
            batch_size: l.batch_size.unwrap_or(d.batch_size),
            replay_capacity: l.replay_capacity.unwrap_or(d.replay_capacity),
            initial_value: l.initial_value.unwrap_or(d.initial_value),
        },
        exploration: ExplorationParams {
            start: e.start.unwrap_or(de.start),
            end: e.end.unwrap_or(de.end),
            decay_fraction: e.decay_fraction.unwrap_or(de.decay_fraction),
        },
        detector: DetectorSettings {
            lengths: dt.lengths.unwrap_or_else(|| vec![5, 10, 20, 40]),
            window: dt.window.unwrap_or(20),
            train: TrainParams {
                epochs: dt.epochs.unwrap_or(100),
                batch_size: dt.batch_size.unwrap_or(32),
                learning_rate: dt.learning_rate.unwrap_or(1e-3),
                hidden: dt.hidden.unwrap_or_else(|| DEFAULT_HIDDEN.to_vec()),
            },
            corpus_traces: dt.corpus_traces.unwrap_or(pick(desk, 1000, 5000)),
            trace_length: dt.trace_length.unwrap_or(40),
            source: dt.source.unwrap_or(if desk {
                CorpusSource::Synthetic
            } else {
                CorpusSource::Simulated
            }),
        },
        egta: EgtaSettings {
            boycott: raw.egta.boycott.unwrap_or(2.0),
            gamma: raw.egta.gamma.unwrap_or(1.0),
            fixture: raw.egta.fixture,
        },
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(c: &ExperimentConfig) -> Result<(), ConfigError> {
    if !(0.0..=1.0).contains(&c.compliance) {
        return Err(invalid("compliance", format!("{} is outside [0, 1]", c.compliance)));
    }
    if c.agents == 0 {
        return Err(invalid("agents", "need at least one agent"));
    }
    if c.grid.width <= 0 || c.grid.height <= 0 {
        return Err(invalid("grid", "width and height must be positive"));
    }
    if c.grid.episode_length == 0 {
        return Err(invalid("episode_length", "must be positive"));
    }
    if c.replicates == 0 {
        return Err(invalid("replicates", "must be at least 1"));
    }
    if c.eval_episodes == 0 {
        return Err(invalid("eval_episodes", "must be at least 1"));
    }
    if c.boycott.is_empty() || c.boycott.iter().any(|b| !(*b >= 0.0)) {
        return Err(invalid("boycott", "need one or more non-negative ratios"));
    }
    if !(c.egta.boycott >= 0.0) {
        return Err(invalid("egta.boycott", "must be non-negative"));
    }
    if !(0.0..=1.0).contains(&c.egta.gamma) {
        return Err(invalid("egta.gamma", "must lie in [0, 1]"));
    }
    if c.scenario == Scenario::Egta && c.agents < 2 {
        return Err(invalid("agents", "EGTA needs the two focal players"));
    }
    if c.scenario == Scenario::Exp2 {
        if c.strong_agents > c.agents {
            return Err(invalid("strong_agents", "more strong agents than agents"));
        }
        if c.defective_agents() > c.strong_agents {
            return Err(invalid("strong_agents", "every defective agent must be strong"));
        }
    }
    let lengths = &c.detector.lengths;
    if lengths.is_empty() || lengths[0] == 0 || lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("detector.lengths", "must be positive and strictly ascending"));
    }
    if c.detector.window == 0 {
        return Err(invalid("detector.window", "must be positive"));
    }
    if !(0.0..=1.0).contains(&c.learner.gamma) || c.learner.alpha < 0.0 {
        return Err(invalid("learner", "need alpha >= 0 and gamma in [0, 1]"));
    }
    if c.learner.batch_size == 0 || c.learner.replay_capacity == 0 {
        return Err(invalid("learner", "batch size and replay capacity must be positive"));
    }
    let x = &c.exploration;
    if !(0.0..=1.0).contains(&x.start) || !(0.0..=x.start).contains(&x.end) {
        return Err(invalid("exploration", "need 0 <= end <= start <= 1"));
    }
    if !(0.0..=1.0).contains(&x.decay_fraction) {
        return Err(invalid("exploration.decay_fraction", "must lie in [0, 1]"));
    }
    compose_pipeline(c.compliant_pipeline.clone())
        .map_err(|e| invalid("compliant_pipeline", e.to_string()))?;
    Ok(())
}
