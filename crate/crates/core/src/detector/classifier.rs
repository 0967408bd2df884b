use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{LabeledDataset, Sample};
use super::quota::Verdict;
use super::DetectorError;
use crate::scalar::{lit, Real};

pub const DEFAULT_HIDDEN: [usize; 3] = [64, 32, 16];
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major, `outputs × inputs`.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Dense<T> {
    fn he_uniform(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / inputs as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| lit(rng.gen_range(-bound..bound)))
                .collect(),
            bias: vec![T::zero(); outputs],
        }
    }

    fn forward(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + row.iter().zip(x).map(|(&w, &v)| w * v).sum::<T>());
        }
    }
}

/// Feedforward network over a fixed-length reward window: ReLU hidden
/// layers, sigmoid output giving the probability of Defective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceClassifier<T> {
    pub length: usize,
    /// Rewards are multiplied by this before entering the network.
    pub input_scale: T,
    pub threshold: f64,
    pub layers: Vec<Dense<T>>,
}

impl<T: Real> SequenceClassifier<T> {
    pub fn new(length: usize, hidden: &[usize], input_scale: T, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut widths = vec![length];
        widths.extend_from_slice(hidden);
        widths.push(1);
        SequenceClassifier {
            length,
            input_scale,
            threshold: DECISION_THRESHOLD,
            layers: widths
                .windows(2)
                .map(|w| Dense::he_uniform(w[0], w[1], &mut rng))
                .collect(),
        }
    }

    fn input(&self, rewards: &[u32]) -> Vec<T> {
        rewards
            .iter()
            .map(|&r| lit::<T>(r as f64) * self.input_scale)
            .collect()
    }

    /// Pre-activations of every layer; the last holds the output logit.
    fn forward(&self, x: Vec<T>) -> Vec<Vec<T>> {
        let mut acts = vec![x];
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward(&acts[k], &mut z);
            if k < last {
                for v in z.iter_mut() {
                    *v = v.max(T::zero());
                }
            }
            acts.push(z);
        }
        acts
    }

    pub fn logit(&self, rewards: &[u32]) -> Result<T, DetectorError> {
        if rewards.len() != self.length {
            return Err(DetectorError::LengthMismatch {
                expected: self.length,
                got: rewards.len(),
            });
        }
        Ok(self.forward(self.input(rewards)).pop().unwrap()[0])
    }

    /// Probability that the window came from a Defective agent.
    pub fn confidence(&self, rewards: &[u32]) -> Result<f64, DetectorError> {
        Ok(sigmoid(self.logit(rewards)?.to_f64_lossy()))
    }

    /// Flagged iff confidence is strictly above the threshold.
    pub fn classify(&self, agent_id: usize, rewards: &[u32]) -> Result<Verdict, DetectorError> {
        let confidence = self.confidence(rewards)?;
        Ok(Verdict {
            agent_id,
            flagged: confidence > self.threshold,
            confidence,
        })
    }

    pub fn accuracy(&self, samples: &[Sample]) -> Result<f64, DetectorError> {
        if samples.is_empty() {
            return Ok(f64::NAN);
        }
        let mut correct = 0usize;
        for s in samples {
            let flagged = self.classify(0, &s.rewards)?.flagged;
            correct += (flagged == (s.label.target() > 0.5)) as usize;
        }
        Ok(correct as f64 / samples.len() as f64)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    pub epochs: u32,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Mean binary cross-entropy over the last epoch.
    pub final_loss: f64,
}

/// Adam moment estimates, one pair per parameter.
struct Moments<T> {
    m: Vec<T>,
    v: Vec<T>,
}

/// Mini-batch Adam on binary cross-entropy. Deterministic given `seed`.
pub fn train_classifier<T: Real>(
    dataset: &LabeledDataset,
    params: &TrainParams,
    seed: u64,
) -> Result<(SequenceClassifier<T>, AccuracyReport), DetectorError> {
    if dataset.train.is_empty() {
        return Err(DetectorError::TooSmall("no training windows".into()));
    }
    if params.batch_size == 0 || params.learning_rate <= 0.0 {
        return Err(DetectorError::Invalid(
            "batch size and learning rate must be positive".into(),
        ));
    }
    let max_reward = dataset
        .train
        .iter()
        .flat_map(|s| s.rewards.iter().copied())
        .max()
        .unwrap_or(0)
        .max(1);
    let mut model = SequenceClassifier::<T>::new(
        dataset.length,
        &params.hidden,
        lit(1.0 / max_reward as f64),
        seed,
    );
    let sizes: Vec<usize> = model
        .layers
        .iter()
        .map(|l| l.weights.len() + l.bias.len())
        .collect();
    let mut moments: Vec<Moments<T>> = sizes
        .iter()
        .map(|&n| Moments {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
        })
        .collect();
    let mut grads: Vec<Vec<T>> = sizes.iter().map(|&n| vec![T::zero(); n]).collect();
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
    let lr = params.learning_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut t = 0i32;
    let mut final_loss = f64::NAN;

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            for g in grads.iter_mut() {
                g.iter_mut().for_each(|x| *x = T::zero());
            }
            for &i in batch {
                let s = &dataset.train[i];
                epoch_loss += backprop(&model, s, &mut grads);
            }
            if !epoch_loss.is_finite() {
                return Err(DetectorError::Divergence {
                    epoch,
                    loss: epoch_loss,
                });
            }
            t += 1;
            let scale = 1.0 / batch.len() as f64;
            let c1 = 1.0 - b1.powi(t);
            let c2 = 1.0 - b2.powi(t);
            for ((layer, g), mo) in model.layers.iter_mut().zip(&grads).zip(&mut moments) {
                let nw = layer.weights.len();
                for (j, &gj) in g.iter().enumerate() {
                    let gj = gj.to_f64_lossy() * scale;
                    let m = b1 * mo.m[j].to_f64_lossy() + (1.0 - b1) * gj;
                    let v = b2 * mo.v[j].to_f64_lossy() + (1.0 - b2) * gj * gj;
                    mo.m[j] = lit(m);
                    mo.v[j] = lit(v);
                    let step: T = lit(lr * (m / c1) / ((v / c2).sqrt() + eps));
                    if j < nw {
                        layer.weights[j] = layer.weights[j] - step;
                    } else {
                        layer.bias[j - nw] = layer.bias[j - nw] - step;
                    }
                }
            }
        }
        final_loss = epoch_loss / dataset.train.len() as f64;
    }
    let report = AccuracyReport {
        train_accuracy: model.accuracy(&dataset.train)?,
        test_accuracy: model.accuracy(&dataset.test)?,
        final_loss,
    };
    Ok((model, report))
}

/// Accumulates parameter gradients of one sample into `grads`; returns its loss.
fn backprop<T: Real>(model: &SequenceClassifier<T>, s: &Sample, grads: &mut [Vec<T>]) -> f64 {
    let acts = model.forward(model.input(&s.rewards));
    let z = acts.last().unwrap()[0].to_f64_lossy();
    let y = s.label.target();
    // log(1 + e^z) - y z, written to stay finite for large |z|
    let loss = z.max(0.0) - y * z + (-z.abs()).exp().ln_1p();
    let mut delta: Vec<T> = vec![lit(sigmoid(z) - y)];
    for k in (0..model.layers.len()).rev() {
        let layer = &model.layers[k];
        let x = &acts[k];
        let g = &mut grads[k];
        let nw = layer.weights.len();
        for (o, &d) in delta.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            let row = &mut g[o * layer.inputs..(o + 1) * layer.inputs];
            for (gw, &xi) in row.iter_mut().zip(x) {
                *gw = *gw + d * xi;
            }
            g[nw + o] = g[nw + o] + d;
        }
        if k > 0 {
            delta = (0..layer.inputs)
                .map(|i| {
                    if x[i] <= T::zero() {
                        return T::zero();
                    }
                    (0..layer.outputs)
                        .map(|o| delta[o] * layer.weights[o * layer.inputs + i])
                        .sum()
                })
                .collect();
        }
    }
    loss
}

pub const MODEL_FORMAT: &str = "regforce.sequence_classifier";

#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: SequenceClassifier<T>,
}

pub fn save_classifier<T: Real + Serialize>(
    model: &SequenceClassifier<T>,
    path: &Path,
) -> Result<(), DetectorError> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: 1,
        model: model.clone(),
    };
    let text = serde_json::to_string(&file).map_err(|e| DetectorError::Format(e.to_string()))?;
    fs::write(path, text).map_err(|e| DetectorError::Io(path.display().to_string(), e))
}

pub fn load_classifier<T: Real + for<'de> Deserialize<'de>>(
    path: &Path,
) -> Result<SequenceClassifier<T>, DetectorError> {
    let text =
        fs::read_to_string(path).map_err(|e| DetectorError::Io(path.display().to_string(), e))?;
    let file: ModelFile<T> =
        serde_json::from_str(&text).map_err(|e| DetectorError::Format(e.to_string()))?;
    if file.format != MODEL_FORMAT || file.version != 1 {
        return Err(DetectorError::Format(format!(
            "unsupported model file {} v{}",
            file.format, file.version
        )));
    }
    let m = file.model;
    let mut prev = m.length;
    for l in &m.layers {
        if l.inputs != prev || l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
            return Err(DetectorError::Format("inconsistent layer shapes".into()));
        }
        prev = l.outputs;
    }
    if prev != 1 {
        return Err(DetectorError::Format("output layer must have width 1".into()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::dataset::{build_dataset, shuffle_labels, synthetic_corpus, Label};
    use crate::detector::BehaviorTrace;
    use rand::Rng;

    /// Compliant windows stay at or below 3; every defective window holds a 5.
    fn separable(per_class: usize, len: usize, seed: u64) -> Vec<(BehaviorTrace, Label)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..per_class {
            let c: Vec<u32> = (0..len).map(|_| [0, 2, 3][rng.gen_range(0..3)]).collect();
            let mut d: Vec<u32> = (0..len).map(|_| [0, 3, 5][rng.gen_range(0..3)]).collect();
            d[rng.gen_range(0..len)] = 5;
            out.push((BehaviorTrace::from_rewards(2 * i, &c), Label::Compliant));
            out.push((BehaviorTrace::from_rewards(2 * i + 1, &d), Label::Defective));
        }
        out
    }

    fn quick() -> TrainParams {
        TrainParams {
            epochs: 40,
            ..TrainParams::default()
        }
    }

    #[test]
    fn shape_and_output_range() {
        let m = SequenceClassifier::<f64>::new(10, &DEFAULT_HIDDEN, 0.2, 1);
        let shapes: Vec<_> = m.layers.iter().map(|l| (l.inputs, l.outputs)).collect();
        assert_eq!(shapes, vec![(10, 64), (64, 32), (32, 16), (16, 1)]);
        for r in [[0u32; 10], [5; 10], [1000; 10]] {
            let c = m.confidence(&r).unwrap();
            assert!((0.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn zero_output_layer_is_not_flagged() {
        let mut m = SequenceClassifier::<f64>::new(4, &DEFAULT_HIDDEN, 0.2, 1);
        let last = m.layers.last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w = 0.0);
        last.bias[0] = 0.0;
        let v = m.classify(3, &[5, 5, 5, 5]).unwrap();
        assert_eq!(v.confidence, 0.5);
        assert!(!v.flagged);
        assert_eq!(v.agent_id, 3);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let m = SequenceClassifier::<f32>::new(4, &[8], 0.2, 1);
        assert!(matches!(
            m.classify(0, &[1, 2, 3]),
            Err(DetectorError::LengthMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn learns_separable_data() {
        let ds = build_dataset(&separable(300, 10, 4), 10, 0.2, 2).unwrap();
        let (m, rep) = train_classifier::<f64>(&ds, &quick(), 7).unwrap();
        assert!(rep.test_accuracy >= 0.95, "{rep:?}");
        assert!(!m.classify(0, &[0; 10]).unwrap().flagged);
        assert!(m.classify(0, &[5, 0, 3, 5, 0, 0, 5, 3, 0, 5]).unwrap().flagged);
    }

    #[test]
    fn random_labels_give_chance_accuracy() {
        let mut c = synthetic_corpus(200, 10, 5);
        shuffle_labels(&mut c, 11);
        let ds = build_dataset(&c, 10, 0.2, 3).unwrap();
        let (_, rep) = train_classifier::<f64>(&ds, &quick(), 1).unwrap();
        assert!((rep.test_accuracy - 0.5).abs() <= 0.1, "{rep:?}");
    }

    #[test]
    fn memorises_small_training_set() {
        let mut ds = build_dataset(&separable(20, 6, 8), 6, 0.2, 1).unwrap();
        ds.test = ds.train.clone();
        let (_, rep) = train_classifier::<f64>(&ds, &TrainParams::default(), 3).unwrap();
        assert!(rep.test_accuracy >= rep.train_accuracy - 1e-12);
        assert!(rep.train_accuracy >= 0.95);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = build_dataset(&synthetic_corpus(40, 10, 1), 5, 0.2, 1).unwrap();
        let p = TrainParams {
            epochs: 3,
            ..TrainParams::default()
        };
        let a = train_classifier::<f64>(&ds, &p, 9).unwrap();
        let b = train_classifier::<f64>(&ds, &p, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported() {
        let ds = build_dataset(&synthetic_corpus(40, 10, 1), 5, 0.2, 1).unwrap();
        let p = TrainParams {
            epochs: 5,
            learning_rate: 1e300,
            ..TrainParams::default()
        };
        assert!(matches!(
            train_classifier::<f64>(&ds, &p, 9),
            Err(DetectorError::Divergence { .. })
        ));
    }

    #[test]
    fn model_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let m = SequenceClassifier::<f64>::new(5, &[4, 3], 0.2, 2);
        save_classifier(&m, &p).unwrap();
        let back: SequenceClassifier<f64> = load_classifier(&p).unwrap();
        assert_eq!(back, m);
    }
}
