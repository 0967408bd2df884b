use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::trace::BehaviorTrace;
use super::DetectorError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Compliant,
    Defective,
}

impl Label {
    pub fn target(self) -> f64 {
        match self {
            Label::Compliant => 0.0,
            Label::Defective => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub rewards: Vec<u32>,
    pub label: Label,
}

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// Fixed-length reward windows split into train and test parts.
///
/// The split is made per source trace, so windows cut from one trace never
/// land on both sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub length: usize,
    pub test_fraction: f64,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    /// Source traces shorter than `length`.
    pub skipped: usize,
}

pub const DATASET_FORMAT: &str = "regforce.dataset";

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    dataset: LabeledDataset,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn save(&self, path: &Path) -> Result<(), DetectorError> {
        let file = DatasetFile {
            format: DATASET_FORMAT.into(),
            version: 1,
            dataset: self.clone(),
        };
        let text =
            serde_json::to_string(&file).map_err(|e| DetectorError::Format(e.to_string()))?;
        fs::write(path, text).map_err(|e| DetectorError::Io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self, DetectorError> {
        let text = fs::read_to_string(path)
            .map_err(|e| DetectorError::Io(path.display().to_string(), e))?;
        let file: DatasetFile =
            serde_json::from_str(&text).map_err(|e| DetectorError::Format(e.to_string()))?;
        if file.format != DATASET_FORMAT || file.version != 1 {
            return Err(DetectorError::Format(format!(
                "unsupported dataset file {} v{}",
                file.format, file.version
            )));
        }
        Ok(file.dataset)
    }
}

/// Which traces go to the test side. Depends only on the trace count and
/// seed, so datasets of different window lengths share one split.
pub fn split_traces(count: usize, test_fraction: f64, seed: u64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (count as f64 * test_fraction).round() as usize;
    let mut is_test = vec![false; count];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    is_test
}

/// Cuts every trace into non-overlapping windows of `length` rewards.
pub fn build_dataset(
    traces: &[(BehaviorTrace, Label)],
    length: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<LabeledDataset, DetectorError> {
    if length == 0 {
        return Err(DetectorError::Invalid("window length must be positive".into()));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(DetectorError::Invalid(format!(
            "test fraction {test_fraction} outside [0, 1)"
        )));
    }
    let has = |l| traces.iter().any(|(_, lab)| *lab == l);
    if !has(Label::Compliant) || !has(Label::Defective) {
        return Err(DetectorError::SingleClass);
    }
    let is_test = split_traces(traces.len(), test_fraction, seed);
    let mut ds = LabeledDataset {
        length,
        test_fraction,
        train: Vec::new(),
        test: Vec::new(),
        skipped: 0,
    };
    for ((trace, label), test) in traces.iter().zip(is_test) {
        let rewards = trace.rewards();
        if rewards.len() < length {
            ds.skipped += 1;
            continue;
        }
        let side = if test { &mut ds.test } else { &mut ds.train };
        side.extend(rewards.chunks_exact(length).map(|w| Sample {
            rewards: w.to_vec(),
            label: *label,
        }));
    }
    if ds.is_empty() {
        return Err(DetectorError::Empty { skipped: ds.skipped });
    }
    if ds.train.is_empty() || ds.test.is_empty() {
        return Err(DetectorError::TooSmall(format!(
            "{} train / {} test windows",
            ds.train.len(),
            ds.test.len()
        )));
    }
    Ok(ds)
}

/// Per-step reward distributions of the synthetic corpus: compliant agents
/// never exceed 3 apples, defective ones sometimes take 5.
pub const COMPLIANT_REWARDS: [(u32, f64); 3] = [(0, 0.6), (2, 0.2), (3, 0.2)];
pub const DEFECTIVE_REWARDS: [(u32, f64); 3] = [(0, 0.6), (3, 0.2), (5, 0.2)];

fn draw(rng: &mut impl Rng, table: &[(u32, f64)]) -> u32 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(v, p) in table {
        acc += p;
        if u < acc {
            return v;
        }
    }
    table[table.len() - 1].0
}

/// Balanced corpus of i.i.d. reward traces. A window is separable exactly
/// when it contains a 5, so longer windows are easier.
pub fn synthetic_corpus(
    per_class: usize,
    trace_len: usize,
    seed: u64,
) -> Vec<(BehaviorTrace, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let (label, table) = if i % 2 == 0 {
            (Label::Compliant, &COMPLIANT_REWARDS)
        } else {
            (Label::Defective, &DEFECTIVE_REWARDS)
        };
        let rewards: Vec<u32> = (0..trace_len).map(|_| draw(&mut rng, table)).collect();
        out.push((BehaviorTrace::from_rewards(i, &rewards), label));
    }
    out
}

/// Replaces every label by a fair coin flip.
pub fn shuffle_labels(corpus: &mut [(BehaviorTrace, Label)], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (_, l) in corpus.iter_mut() {
        *l = if rng.gen_bool(0.5) {
            Label::Defective
        } else {
            Label::Compliant
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(c: usize, d: usize, len: usize) -> Vec<(BehaviorTrace, Label)> {
        let mut v: Vec<_> = (0..c)
            .map(|i| (BehaviorTrace::from_rewards(i, &vec![3; len]), Label::Compliant))
            .collect();
        v.extend((0..d).map(|i| (BehaviorTrace::from_rewards(c + i, &vec![5; len]), Label::Defective)));
        v
    }

    #[test]
    fn split_is_disjoint_and_near_fraction() {
        let ds = build_dataset(&corpus(100, 100, 10), 10, 0.2, 1).unwrap();
        assert_eq!(ds.len(), 200);
        assert_eq!(ds.test.len(), 40);
        assert!(ds.train.iter().any(|s| s.label == Label::Compliant));
        assert!(ds.train.iter().any(|s| s.label == Label::Defective));
    }

    #[test]
    fn windows_do_not_overlap() {
        let ds = build_dataset(&corpus(5, 5, 25), 10, 0.2, 1).unwrap();
        assert_eq!(ds.len(), 20);
        assert!(ds.train.iter().chain(&ds.test).all(|s| s.rewards.len() == 10));
    }

    #[test]
    fn degenerate_inputs() {
        let only_c = corpus(10, 0, 10);
        assert!(matches!(build_dataset(&only_c, 5, 0.2, 0), Err(DetectorError::SingleClass)));
        let short = corpus(10, 10, 4);
        assert!(matches!(
            build_dataset(&short, 5, 0.2, 0),
            Err(DetectorError::Empty { skipped: 20 })
        ));
        let one_each = corpus(1, 1, 10);
        assert!(matches!(build_dataset(&one_each, 10, 0.2, 0), Err(DetectorError::TooSmall(_))));
    }

    #[test]
    fn split_is_independent_of_window_length() {
        let c = synthetic_corpus(30, 40, 3);
        let a = build_dataset(&c, 5, 0.2, 9).unwrap();
        let b = build_dataset(&c, 40, 0.2, 9).unwrap();
        assert_eq!(a.test.len(), 8 * b.test.len());
    }

    #[test]
    fn synthetic_classes_differ_only_in_fives() {
        let c = synthetic_corpus(50, 40, 2);
        assert_eq!(c.len(), 100);
        for (t, l) in &c {
            let r = t.rewards();
            match l {
                Label::Compliant => assert!(r.iter().all(|&x| x <= 3)),
                Label::Defective => assert!(r.iter().all(|&x| matches!(x, 0 | 3 | 5))),
            }
        }
    }

    #[test]
    fn roundtrip_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        let ds = build_dataset(&corpus(5, 5, 10), 5, 0.2, 1).unwrap();
        ds.save(&p).unwrap();
        assert_eq!(LabeledDataset::load(&p).unwrap(), ds);
    }
}
