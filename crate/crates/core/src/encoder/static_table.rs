use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use srlgnn_tensor::{Bound, Precision, Scalar, Tape, Tensor};

use super::input::InputSequence;
use super::{EncodedVars, SequenceEncoder};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct TableHeader {
    vocab_size: usize,
    d_lm: usize,
    precision: Precision,
}

/// Fixed `[vocab_size, d_lm]` embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticTable<T> {
    pub embeddings: Tensor<T>,
}

impl<T: Scalar> StaticTable<T> {
    pub fn new(embeddings: Tensor<T>) -> Self {
        Self { embeddings }
    }

    /// Row `i` is the `i`-th standard basis vector of width `d`.
    pub fn unit_basis(vocab_size: usize, d: usize) -> Self {
        Self::new(Tensor::from_fn(vocab_size, d, |r, c| {
            if r % d == c {
                T::one()
            } else {
                T::zero()
            }
        }))
    }

    pub fn vocab_size(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn d_lm(&self) -> usize {
        self.embeddings.cols()
    }

    /// A JSON header line `{"vocab_size", "d_lm", "precision"}` followed by
    /// little-endian row-major values.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let header = TableHeader {
            vocab_size: self.vocab_size(),
            d_lm: self.d_lm(),
            precision: T::PRECISION,
        };
        let mut out = serde_json::to_vec(&header)?;
        out.push(b'\n');
        for &v in self.embeddings.data() {
            v.write_le(&mut out);
        }
        fs::write(path, out).map_err(Error::io(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(Error::io(path))?;
        let end = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Config(format!("{}: missing table header", path.display())))?;
        let header: TableHeader = serde_json::from_slice(&bytes[..end])?;
        let body = &bytes[end + 1..];
        let width = header.precision.byte_width();
        let n = header.vocab_size * header.d_lm;
        if body.len() != n * width {
            return Err(Error::Config(format!(
                "{}: expected {} value bytes, found {}",
                path.display(),
                n * width,
                body.len()
            )));
        }
        let data: Vec<T> = match header.precision {
            Precision::F32 => body.chunks_exact(4).map(|b| T::of(f32::read_le(b) as f64)).collect(),
            Precision::F64 => body.chunks_exact(8).map(|b| T::of(f64::read_le(b))).collect(),
        };
        Ok(Self::new(Tensor::new(vec![header.vocab_size, header.d_lm], data)?))
    }
}

/// Returns table rows verbatim; nothing is trainable.
#[derive(Debug, Clone)]
pub struct StaticEncoder<T> {
    pub table: StaticTable<T>,
}

impl<T: Scalar> StaticEncoder<T> {
    pub fn new(table: StaticTable<T>) -> Self {
        Self { table }
    }
}

impl<T: Scalar> SequenceEncoder<T> for StaticEncoder<T> {
    fn d_model(&self) -> usize {
        self.table.d_lm()
    }

    fn encode(&self, tape: &mut Tape<T>, _params: &Bound<'_, T>, seq: &InputSequence) -> Result<EncodedVars> {
        if let Some(&bad) = seq.token_ids.iter().find(|&&id| id >= self.table.vocab_size()) {
            return Err(Error::MissingEmbedding(bad));
        }
        let table = tape.constant(self.table.embeddings.clone());
        let tokens = tape.gather_rows(table, &seq.token_ids)?;
        let cls = tape.gather_rows(tokens, &[0])?;
        Ok(EncodedVars {
            tokens,
            cls,
            attention: Vec::new(),
        })
    }
}
