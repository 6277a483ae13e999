//! Checkpoint files: the model geometry plus every named parameter tensor
//! with its explicit shape, as one JSON object. Loading rebuilds the params
//! from the geometry and refuses any missing, extra, or misshapen tensor.

use crate::chronnectome::write_atomic;
use crate::error::{Error, Result};
use crate::recurrent::params::{ModelConfig, ModelParams};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    model_config: ModelConfig,
    tensors: Vec<TensorRecord>,
}

/// Serializes a checkpoint to JSON. Field and tensor order are fixed, so
/// identical params produce identical bytes.
pub fn checkpoint_to_json(config: &ModelConfig, params: &ModelParams) -> Result<String> {
    if params.variant() != config.variant {
        return Err(Error::Config(
            "checkpoint config/params variant mismatch".to_string(),
        ));
    }
    let tensors = params
        .tensors()
        .into_iter()
        .map(|t| TensorRecord {
            name: t.name,
            rows: t.rows,
            cols: t.cols,
            values: t.values.to_vec(),
        })
        .collect();
    let file = CheckpointFile {
        model_config: *config,
        tensors,
    };
    Ok(serde_json::to_string(&file)?)
}

/// Parses and validates a checkpoint produced by `checkpoint_to_json`.
pub fn checkpoint_from_json(json: &str) -> Result<(ModelConfig, ModelParams)> {
    let file: CheckpointFile = serde_json::from_str(json)?;
    let config = file.model_config;
    let mut params = ModelParams::zeroed(&config)?;
    let mut expected: Vec<String> = params.tensors().into_iter().map(|t| t.name).collect();
    for record in &file.tensors {
        let pos = expected
            .iter()
            .position(|n| *n == record.name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "checkpoint tensor '{}' is duplicated or unknown for {}",
                    record.name, config.variant
                ))
            })?;
        expected.swap_remove(pos);
        let mut views = params.tensors_mut();
        let target = views
            .iter_mut()
            .find(|t| t.name == record.name)
            .expect("name came from the same enumeration");
        if target.rows != record.rows || target.cols != record.cols {
            return Err(Error::shape(
                "checkpoint_from_json",
                format!(
                    "tensor '{}' is {}x{}, expected {}x{}",
                    record.name, record.rows, record.cols, target.rows, target.cols
                ),
            ));
        }
        if record.values.len() != target.values.len() {
            return Err(Error::shape(
                "checkpoint_from_json",
                format!(
                    "tensor '{}' has {} values, expected {}",
                    record.name,
                    record.values.len(),
                    target.values.len()
                ),
            ));
        }
        if record.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "checkpoint tensor '{}'",
                record.name
            )));
        }
        target.values.copy_from_slice(&record.values);
    }
    if !expected.is_empty() {
        return Err(Error::Config(format!(
            "checkpoint is missing tensors: {}",
            expected.join(", ")
        )));
    }
    Ok((config, params))
}

pub fn save_checkpoint(path: &Path, config: &ModelConfig, params: &ModelParams) -> Result<()> {
    let json = checkpoint_to_json(config, params)?;
    write_atomic(path, json.as_bytes()).map_err(|e| Error::io(&path.display().to_string(), e))
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelConfig, ModelParams)> {
    let json = std::fs::read_to_string(path)
        .map_err(|e| Error::io(&path.display().to_string(), e))?;
    checkpoint_from_json(&json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use crate::recurrent::params::{init_params, Variant};

    #[test]
    fn round_trip_is_exact_for_every_variant() {
        let dir = tempfile::tempdir().unwrap();
        for (k, variant) in Variant::ALL.into_iter().enumerate() {
            let config = ModelConfig::new(variant, 5, 3, 4);
            let params = init_params(&config, &mut Rng::new(k as u64, 0)).unwrap();
            let path = dir.path().join(format!("{variant}.json"));
            save_checkpoint(&path, &config, &params).unwrap();
            let (config2, params2) = load_checkpoint(&path).unwrap();
            assert_eq!(config2, config);
            assert_eq!(params2, params);
        }
    }

    #[test]
    fn serialization_is_deterministic() {
        let config = ModelConfig::new(Variant::FullBiLstm, 4, 2, 3);
        let params = init_params(&config, &mut Rng::new(7, 0)).unwrap();
        let a = checkpoint_to_json(&config, &params).unwrap();
        let b = checkpoint_to_json(&config, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tampered_shape_is_rejected() {
        let config = ModelConfig::new(Variant::FullLstm, 4, 2, 3);
        let params = init_params(&config, &mut Rng::new(11, 0)).unwrap();
        let json = checkpoint_to_json(&config, &params).unwrap();
        let tampered = json.replacen("\"rows\":2", "\"rows\":3", 1);
        assert_ne!(json, tampered);
        assert!(checkpoint_from_json(&tampered).is_err());
    }

    #[test]
    fn missing_tensor_is_rejected() {
        let config = ModelConfig::new(Variant::FullLstm, 4, 2, 3);
        let params = init_params(&config, &mut Rng::new(13, 0)).unwrap();
        let json = checkpoint_to_json(&config, &params).unwrap();
        let mut file: serde_json::Value = serde_json::from_str(&json).unwrap();
        let tensors = file["tensors"].as_array_mut().unwrap();
        tensors.pop();
        let json2 = serde_json::to_string(&file).unwrap();
        let err = checkpoint_from_json(&json2).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }

    #[test]
    fn duplicated_tensor_is_rejected() {
        let config = ModelConfig::new(Variant::FullLstm, 4, 2, 3);
        let params = init_params(&config, &mut Rng::new(17, 0)).unwrap();
        let json = checkpoint_to_json(&config, &params).unwrap();
        let mut file: serde_json::Value = serde_json::from_str(&json).unwrap();
        let tensors = file["tensors"].as_array_mut().unwrap();
        let first = tensors[0].clone();
        tensors.push(first);
        let json2 = serde_json::to_string(&file).unwrap();
        assert!(checkpoint_from_json(&json2).is_err());
    }
}
