//! Single-file parameter checkpoints.
//!
//! Layout: one line of compact JSON (the header), a `\n`, then every
//! parameter's values as raw little-endian floats, concatenated in header
//! order. Extra header keys carry caller metadata.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Result, TensorError};
use crate::params::ParamStore;
use crate::scalar::{Precision, Scalar};
use crate::tensor::Tensor;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub precision: Precision,
    pub params: Vec<ParamEntry>,
    #[serde(flatten)]
    pub metadata: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub params: ParamStore<T>,
    pub metadata: Map<String, Value>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(params: ParamStore<T>) -> Self {
        Self {
            params,
            metadata: Map::new(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = CheckpointHeader {
            version: CHECKPOINT_VERSION,
            precision: T::PRECISION,
            params: self
                .params
                .iter()
                .map(|(name, t)| ParamEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
            metadata: self.metadata.clone(),
        };
        let mut out = serde_json::to_vec(&header)?;
        out.push(b'\n');
        out.reserve(self.params.num_values() * T::PRECISION.byte_width());
        for t in self.params.values() {
            for &v in t.data() {
                v.write_le(&mut out);
            }
        }
        Ok(out)
    }

    /// Parses a checkpoint, converting stored values to `T` if the file was
    /// written at the other precision.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, body) = split_header(bytes)?;
        let width = header.precision.byte_width();
        let expected: usize = header
            .params
            .iter()
            .map(|p| p.shape.iter().product::<usize>())
            .sum();
        if body.len() != expected * width {
            return Err(TensorError::Checkpoint(format!(
                "expected {} value bytes, found {}",
                expected * width,
                body.len()
            )));
        }
        let mut params = ParamStore::new();
        let mut offset = 0;
        for entry in header.params {
            let n: usize = entry.shape.iter().product();
            let chunk = &body[offset..offset + n * width];
            let data: Vec<T> = match header.precision {
                Precision::F32 => chunk.chunks_exact(4).map(|b| T::of(f32::read_le(b) as f64)).collect(),
                Precision::F64 => chunk.chunks_exact(8).map(|b| T::of(f64::read_le(b))).collect(),
            };
            params.insert(entry.name, Tensor::new(entry.shape, data)?)?;
            offset += n * width;
        }
        Ok(Self {
            params,
            metadata: header.metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Reads only the header of a checkpoint file.
pub fn read_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    split_header(bytes).map(|(h, _)| h)
}

fn split_header(bytes: &[u8]) -> Result<(CheckpointHeader, &[u8])> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| TensorError::Checkpoint("missing header terminator".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..end])?;
    if header.version != CHECKPOINT_VERSION {
        return Err(TensorError::Checkpoint(format!(
            "unsupported version {}",
            header.version
        )));
    }
    Ok((header, &bytes[end + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParamStore<f32> {
        let mut s = ParamStore::new();
        s.insert("enc.w", Tensor::from_rows(&[vec![1.0, -2.5], vec![0.25, 3.0]]).unwrap())
            .unwrap();
        s.insert("head.b", Tensor::row(vec![0.5])).unwrap();
        s
    }

    #[test]
    fn header_is_documented_json() {
        let bytes = Checkpoint::new(store()).to_bytes().unwrap();
        let end = bytes.iter().position(|&b| b == b'\n').unwrap();
        let v: Value = serde_json::from_slice(&bytes[..end]).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["precision"], "f32");
        assert_eq!(v["params"][0]["name"], "enc.w");
        assert_eq!(v["params"][0]["shape"], serde_json::json!([2, 2]));
        assert_eq!(bytes.len() - end - 1, 5 * 4);
        assert_eq!(&bytes[end + 1..end + 5], &1.0f32.to_le_bytes());
    }

    #[test]
    fn truncated_body_rejected() {
        let mut bytes = Checkpoint::new(store()).to_bytes().unwrap();
        bytes.pop();
        assert!(Checkpoint::<f32>::from_bytes(&bytes).is_err());
    }

    #[test]
    fn metadata_survives() {
        let mut ck = Checkpoint::new(store());
        ck.metadata.insert("labels".into(), serde_json::json!(["a", "b"]));
        let back = Checkpoint::<f32>::from_bytes(&ck.to_bytes().unwrap()).unwrap();
        assert_eq!(back, ck);
    }

    #[test]
    fn precision_converts_on_load() {
        let bytes = Checkpoint::new(store()).to_bytes().unwrap();
        let wide = Checkpoint::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(wide.params.get("enc.w").unwrap().data(), &[1.0, -2.5, 0.25, 3.0]);
    }
}
