//! Compliance detectors over behaviour traces: a per-step quota rule and a
//! learned classifier over reward windows.

mod classifier;
mod dataset;
mod quota;
mod sweep;
mod trace;

pub use classifier::{
    load_classifier, save_classifier, sigmoid, train_classifier, AccuracyReport, Dense,
    SequenceClassifier, TrainParams, DECISION_THRESHOLD, DEFAULT_HIDDEN,
};
pub use dataset::{
    build_dataset, shuffle_labels, split_traces, synthetic_corpus, Label, LabeledDataset, Sample,
    COMPLIANT_REWARDS, DEFAULT_TEST_FRACTION, DEFECTIVE_REWARDS,
};
pub use quota::{quota_detect, Verdict, DEFAULT_QUOTA};
pub use sweep::{length_sweep, SweepPoint};
pub use trace::{BehaviorTrace, TraceEntry};

#[derive(Debug, thiserror::Error)]
pub enum DetectorError {
    #[error("dataset needs both compliant and defective traces")]
    SingleClass,
    #[error("no trace is long enough for the window ({skipped} skipped)")]
    Empty { skipped: usize },
    #[error("dataset too small to split: {0}")]
    TooSmall(String),
    #[error("input of length {got}, classifier expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("training diverged in epoch {epoch} (loss {loss})")]
    Divergence { epoch: u32, loss: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("malformed file: {0}")]
    Format(String),
}
