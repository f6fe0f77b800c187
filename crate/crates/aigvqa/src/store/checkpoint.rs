//! JSON checkpoints: `{format_version, config, params}` where each parameter
//! is `{shape: [rows, cols], data}` and `data` is base64 of little-endian
//! f32 values in row-major order.

use std::collections::BTreeMap;
use std::path::Path;

use aigvqa_core::assessor::{AssessorConfig, AssessorParams, ParamName, Tensor};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{write_atomic, StoreError};

pub const CHECKPOINT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    shape: Vec<usize>,
    data: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u64,
    config: AssessorConfig,
    params: BTreeMap<String, TensorRecord>,
}

/// Serialized checkpoint. Values are stored as f32; trained parameters
/// are always f32-exact, so nothing is lost.
pub fn checkpoint_bytes(params: &AssessorParams, config: &AssessorConfig) -> Vec<u8> {
    let params = params
        .iter()
        .map(|(name, t)| {
            let bytes: Vec<u8> = t.data.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
            (
                name.as_str().to_string(),
                TensorRecord {
                    shape: vec![t.rows, t.cols],
                    data: STANDARD.encode(bytes),
                },
            )
        })
        .collect();
    let file = CheckpointFile {
        format_version: CHECKPOINT_VERSION,
        config: config.clone(),
        params,
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("checkpoint serializes");
    out.push(b'\n');
    out
}

pub fn save_checkpoint(params: &AssessorParams, config: &AssessorConfig, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, &checkpoint_bytes(params, config)).map_err(|e| StoreError::io(path, e))
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<(AssessorParams, AssessorConfig), StoreError> {
    let malformed = |e: serde_json::Error| StoreError::Malformed(e.to_string());
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(malformed)?;
    match value.get("format_version") {
        Some(v) if v.as_u64() == Some(CHECKPOINT_VERSION) => {}
        other => {
            return Err(StoreError::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: other.map_or_else(|| "missing".to_string(), |v| v.to_string()),
            })
        }
    }
    let file: CheckpointFile = serde_json::from_value(value).map_err(malformed)?;
    let config = file.config;
    let mut tensors = Vec::with_capacity(file.params.len());
    for (key, record) in file.params {
        let name = ParamName::parse(&key).ok_or_else(|| StoreError::Malformed(format!("unknown parameter {key}")))?;
        let expected = name.shape(&config).to_vec();
        if record.shape != expected {
            return Err(StoreError::ShapeMismatch {
                name: key,
                expected,
                found: record.shape,
            });
        }
        let bytes = STANDARD
            .decode(record.data.as_bytes())
            .map_err(|e| StoreError::Malformed(format!("parameter {key}: {e}")))?;
        if bytes.len() != 4 * expected[0] * expected[1] {
            return Err(StoreError::ShapeMismatch {
                name: key,
                expected,
                found: vec![bytes.len() / 4],
            });
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        tensors.push((
            name,
            Tensor {
                rows: expected[0],
                cols: expected[1],
                data,
            },
        ));
    }
    let params = AssessorParams::from_tensors(&config, tensors).map_err(|e| StoreError::Malformed(e.to_string()))?;
    Ok((params, config))
}

pub fn load_checkpoint(path: &Path) -> Result<(AssessorParams, AssessorConfig), StoreError> {
    let bytes = std::fs::read(path).map_err(|e| StoreError::io(path, e))?;
    parse_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> AssessorConfig {
        AssessorConfig {
            d_token: 4,
            d_hidden: 6,
            prompt_buckets: 8,
            patch_grid: 2,
            seed: 5,
            ..AssessorConfig::default()
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let config = small();
        let params = AssessorParams::init(&config);
        let (back, c) = parse_checkpoint(&checkpoint_bytes(&params, &config)).unwrap();
        assert_eq!(c, config);
        for ((_, a), (_, b)) in params.iter().zip(back.iter()) {
            let bits = |t: &Tensor| t.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    fn tamper(edit: impl FnOnce(&mut serde_json::Value)) -> Result<(AssessorParams, AssessorConfig), StoreError> {
        let config = small();
        let bytes = checkpoint_bytes(&AssessorParams::init(&config), &config);
        let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        edit(&mut v);
        parse_checkpoint(&serde_json::to_vec(&v).unwrap())
    }

    #[test]
    fn unknown_version() {
        assert!(matches!(
            tamper(|v| v["format_version"] = 2.into()),
            Err(StoreError::VersionMismatch { .. })
        ));
        assert!(matches!(
            tamper(|v| {
                v.as_object_mut().unwrap().remove("format_version");
            }),
            Err(StoreError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn tampered_shape() {
        let r = tamper(|v| v["params"]["fusion_w"]["shape"] = serde_json::json!([3, 3]));
        assert!(matches!(r, Err(StoreError::ShapeMismatch { name, .. }) if name == "fusion_w"));
        let r = tamper(|v| v["params"]["fusion_w"]["data"] = "AAAAAA==".into());
        assert!(matches!(r, Err(StoreError::ShapeMismatch { .. })));
    }

    #[test]
    fn missing_or_unknown_params() {
        assert!(matches!(
            tamper(|v| {
                v["params"].as_object_mut().unwrap().remove("judge_u1");
            }),
            Err(StoreError::Malformed(_))
        ));
        assert!(matches!(
            tamper(|v| v["params"]["bogus"] = serde_json::json!({"shape": [1, 1], "data": ""})),
            Err(StoreError::Malformed(_))
        ));
    }
}
