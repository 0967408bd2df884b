use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{train_classifier, TrainParams};
use super::dataset::{build_dataset, Label, DEFAULT_TEST_FRACTION};
use super::trace::BehaviorTrace;
use super::DetectorError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub length: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub train_windows: usize,
    pub test_windows: usize,
}

/// One classifier per window length, all on the same trace-level split.
pub fn length_sweep(
    corpus: &[(BehaviorTrace, Label)],
    lengths: &[usize],
    params: &TrainParams,
    seed: u64,
) -> Result<Vec<SweepPoint>, DetectorError> {
    if lengths.is_empty() || lengths.contains(&0) || lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DetectorError::Invalid(format!(
            "lengths must be positive and strictly ascending, got {lengths:?}"
        )));
    }
    lengths
        .par_iter()
        .map(|&length| {
            let ds = build_dataset(corpus, length, DEFAULT_TEST_FRACTION, seed)?;
            let (_, rep) = train_classifier::<f64>(&ds, params, seed ^ length as u64)?;
            Ok(SweepPoint {
                length,
                train_accuracy: rep.train_accuracy,
                test_accuracy: rep.test_accuracy,
                train_windows: ds.train.len(),
                test_windows: ds.test.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::dataset::{shuffle_labels, synthetic_corpus};

    fn quick() -> TrainParams {
        TrainParams {
            epochs: 20,
            ..TrainParams::default()
        }
    }

    #[test]
    fn longer_windows_do_not_hurt() {
        let c = synthetic_corpus(600, 20, 1);
        let pts = length_sweep(&c, &[5, 20], &quick(), 3).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts[1].test_accuracy >= pts[0].test_accuracy - 0.02, "{pts:?}");
    }

    #[test]
    fn single_length() {
        let c = synthetic_corpus(50, 10, 1);
        let pts = length_sweep(&c, &[10], &quick(), 3).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].length, 10);
    }

    #[test]
    fn random_labels_stay_near_chance() {
        let mut c = synthetic_corpus(200, 20, 4);
        shuffle_labels(&mut c, 5);
        for p in length_sweep(&c, &[5, 10], &quick(), 3).unwrap() {
            assert!((p.test_accuracy - 0.5).abs() <= 0.1, "{p:?}");
        }
    }

    #[test]
    fn rejects_unsorted_lengths() {
        let c = synthetic_corpus(5, 10, 1);
        assert!(length_sweep(&c, &[10, 5], &quick(), 0).is_err());
        assert!(length_sweep(&c, &[], &quick(), 0).is_err());
    }
}
