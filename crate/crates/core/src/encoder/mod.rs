//! Sequence encoders producing per-token contextual embeddings plus the
//! `[CLS]` embedding.
//!
//! Two implementations share the [`SequenceEncoder`] trait: a small
//! pre-norm transformer trained from scratch, and a fixed lookup table used
//! as a deterministic test double.

mod input;
mod static_table;
mod tokenize;
mod transformer;
mod vocab;

use srlgnn_tensor::{Bound, Scalar, Tape, Tensor, Var};

use crate::error::Result;

pub use input::{aux_tokens, build_input, InputSequence, AUX_TEMPLATE};
pub use static_table::{StaticEncoder, StaticTable};
pub use tokenize::tokenize;
pub use transformer::{EncoderConfig, TransformerEncoder};
pub use vocab::{Vocab, CLS, PAD, SEP, UNK};

/// Encoder output as it lives on a tape.
#[derive(Debug, Clone)]
pub struct EncodedVars {
    /// `[seq_len, d_model]`
    pub tokens: Var,
    /// `[1, d_model]`, row 0 of `tokens`.
    pub cls: Var,
    /// Row-stochastic self-attention matrices, one per layer and head.
    pub attention: Vec<Var>,
}

/// Detached encoder output.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence<T> {
    pub token_embeddings: Tensor<T>,
    pub cls_embedding: Tensor<T>,
}

impl EncodedVars {
    pub fn values<T: Scalar>(&self, tape: &Tape<T>) -> EncodedSequence<T> {
        EncodedSequence {
            token_embeddings: tape.value(self.tokens).clone(),
            cls_embedding: tape.value(self.cls).clone(),
        }
    }
}

pub trait SequenceEncoder<T: Scalar>: Send + Sync {
    fn d_model(&self) -> usize;

    fn encode(&self, tape: &mut Tape<T>, params: &Bound<'_, T>, seq: &InputSequence) -> Result<EncodedVars>;
}
