use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::approximator::LinearQ;
use super::features::FeatureEncoder;
use super::LearnerError;
use crate::gridworld::ACTION_COUNT;
use crate::scalar::Real;

pub const MODEL_FORMAT: &str = "regforce.linear_q";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TabularFile<T> {
    format: String,
    version: u32,
    scalar: String,
    encoder: FeatureEncoder,
    actions: usize,
    weights: Vec<Vec<T>>,
}

pub fn save_linear<T>(q: &LinearQ<T>, path: &Path) -> Result<(), LearnerError>
where
    T: Real + Serialize,
{
    let file = TabularFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        scalar: std::any::type_name::<T>().to_string(),
        encoder: q.encoder().clone(),
        actions: ACTION_COUNT,
        weights: q.raw_weights().iter().map(|row| row.to_vec()).collect(),
    };
    let text = serde_json::to_string(&file).map_err(|e| LearnerError::Format(e.to_string()))?;
    fs::write(path, text).map_err(|e| LearnerError::Io(path.display().to_string(), e))
}

pub fn load_linear<T>(path: &Path) -> Result<LinearQ<T>, LearnerError>
where
    T: Real + for<'de> Deserialize<'de>,
{
    let text =
        fs::read_to_string(path).map_err(|e| LearnerError::Io(path.display().to_string(), e))?;
    let file: TabularFile<T> =
        serde_json::from_str(&text).map_err(|e| LearnerError::Format(e.to_string()))?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(LearnerError::Format(format!(
            "unsupported model file {} v{}",
            file.format, file.version
        )));
    }
    if file.actions != ACTION_COUNT {
        return Err(LearnerError::Format(format!(
            "model has {} actions, expected {ACTION_COUNT}",
            file.actions
        )));
    }
    let weights = file
        .weights
        .into_iter()
        .map(|row| {
            <[T; ACTION_COUNT]>::try_from(row)
                .map_err(|r| LearnerError::Format(format!("row of length {}", r.len())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    LinearQ::from_parts(file.encoder, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.json");
        let mut q = LinearQ::<f64>::new(FeatureEncoder::default());
        q.set_weight(17, 3, -2.5);
        q.set_weight(0, 32, 1e-3);
        save_linear(&q, &path).unwrap();
        let back: LinearQ<f64> = load_linear(&path).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.json");
        std::fs::write(&path, r#"{"format":"other","version":1,"scalar":"f64","encoder":{"groups":[]},"actions":33,"weights":[]}"#).unwrap();
        assert!(matches!(load_linear::<f64>(&path), Err(LearnerError::Format(_))));
    }
}
