//! Experiment runners, configuration and result files.

mod config;
mod plot;
mod report;
mod roster;
mod runners;
mod seeds;
mod simulation;

pub use config::{
    parse_config, parse_config_str, parse_config_with, ConfigError, CorpusSource,
    DetectorSettings, EgtaSettings, ExperimentConfig, Overrides, Regulation, Scale, Scenario,
};
pub use plot::{line_chart, Series};
pub use report::{
    condition_name, emit_outputs, load_detector_metrics, load_returns, load_summary, summarize,
    verify_outputs, ConditionSummary, DetectorMetric, FlagRate, ReturnRow, RunReport,
    SummaryFile, ALL_COMPLIANT, DETECTOR_FILE, PAYOFF_AFTER_FILE, PAYOFF_BEFORE_FILE,
    RETURNS_FILE, SUMMARY_FILE,
};
pub use runners::{
    exact_cc_kind, run, run_detector_sweep, run_egta, run_experiment1, run_experiment2,
};

pub use roster::{
    arrange, compliant_count, slot_to_id, AgentSpec, CapabilityClass, GridSpec, Role,
    DEFECTIVE_CAP,
};
pub use seeds::{derive_seed, stream};
pub use simulation::{
    rollout, simulate, ClassifierDetector, DefectorDetector, ExplorationParams, NullDetector,
    QuotaDetector, SimulationOutcome, SimulationPlan,
};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    World(#[from] crate::gridworld::WorldError),
    #[error(transparent)]
    Learner(#[from] crate::learner::LearnerError),
    #[error(transparent)]
    Shaping(#[from] crate::shaping::ShapingError),
    #[error(transparent)]
    Detector(#[from] crate::detector::DetectorError),
    #[error(transparent)]
    Game(#[from] crate::gametheory::GameError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("{0}: {1}")]
    Output(String, String),
    #[error("inconsistent outputs: {0}")]
    Inconsistent(String),
}
