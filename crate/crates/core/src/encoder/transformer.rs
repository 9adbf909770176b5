use rand::Rng;
use serde::{Deserialize, Serialize};
use srlgnn_tensor::{Bound, ParamStore, Scalar, Tape, Tensor, Var};

use super::input::InputSequence;
use super::{EncodedVars, SequenceEncoder};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub d_lm: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub t_max: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            d_lm: 64,
            n_layers: 2,
            n_heads: 2,
            t_max: 128,
        }
    }
}

impl EncoderConfig {
    pub fn ffn_width(&self) -> usize {
        4 * self.d_lm
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_lm == 0 || self.n_heads == 0 || self.d_lm % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_lm ({}) must be a positive multiple of n_heads ({})",
                self.d_lm, self.n_heads
            )));
        }
        if self.t_max < 2 {
            return Err(Error::Config("t_max must be at least 2".into()));
        }
        Ok(())
    }
}

/// Pre-norm transformer encoder: token + segment embeddings plus fixed
/// sinusoidal positions, `n_layers` blocks of multi-head self-attention and
/// a ReLU feed-forward layer, then a final layer norm.
#[derive(Debug, Clone)]
pub struct TransformerEncoder {
    pub config: EncoderConfig,
    pub vocab_size: usize,
    positions: Vec<f64>,
}

fn sinusoid(t_max: usize, d: usize) -> Vec<f64> {
    let mut table = vec![0.0; t_max * d];
    for pos in 0..t_max {
        for i in 0..d {
            let exponent = (2 * (i / 2)) as f64 / d as f64;
            let angle = pos as f64 / 10000f64.powf(exponent);
            table[pos * d + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    table
}

impl TransformerEncoder {
    pub fn new(config: EncoderConfig, vocab_size: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            positions: sinusoid(config.t_max, config.d_lm),
            config,
            vocab_size,
        })
    }

    /// Registers all `enc.*` parameters. Embedding rows are drawn from
    /// `[-1, 1]`; linear weights and biases from `[-1/sqrt(fan_in),
    /// 1/sqrt(fan_in)]`; layer norm gains start at 1 and shifts at 0.
    pub fn init_params<T: Scalar, R: Rng>(&self, store: &mut ParamStore<T>, rng: &mut R) -> Result<()> {
        let d = self.config.d_lm;
        let ff = self.config.ffn_width();
        store.insert_uniform("enc.tok_emb", self.vocab_size, d, 1, rng)?;
        store.insert_uniform("enc.seg_emb", 2, d, 1, rng)?;
        for l in 0..self.config.n_layers {
            let p = format!("enc.l{l}");
            store.insert(format!("{p}.ln1.g"), Tensor::full(&[1, d], T::one()))?;
            store.insert(format!("{p}.ln1.b"), Tensor::zeros(&[1, d]))?;
            for w in ["q", "k", "v", "o"] {
                store.insert_uniform(format!("{p}.attn.w{w}"), d, d, d, rng)?;
                // a key bias adds the same amount to every score in a row,
                // which softmax cancels, so keys get none
                if w != "k" {
                    store.insert_uniform(format!("{p}.attn.b{w}"), 1, d, d, rng)?;
                }
            }
            store.insert(format!("{p}.ln2.g"), Tensor::full(&[1, d], T::one()))?;
            store.insert(format!("{p}.ln2.b"), Tensor::zeros(&[1, d]))?;
            store.insert_uniform(format!("{p}.ffn.w1"), d, ff, d, rng)?;
            store.insert_uniform(format!("{p}.ffn.b1"), 1, ff, d, rng)?;
            store.insert_uniform(format!("{p}.ffn.w2"), ff, d, ff, rng)?;
            store.insert_uniform(format!("{p}.ffn.b2"), 1, d, ff, rng)?;
        }
        store.insert("enc.ln_f.g", Tensor::full(&[1, d], T::one()))?;
        store.insert("enc.ln_f.b", Tensor::zeros(&[1, d]))?;
        Ok(())
    }

    fn linear<T: Scalar>(tape: &mut Tape<T>, p: &Bound<'_, T>, x: Var, w: &str, b: &str) -> Result<Var> {
        let y = tape.matmul(x, p.var(w)?)?;
        Ok(tape.add(y, p.var(b)?)?)
    }

    fn layer_norm<T: Scalar>(tape: &mut Tape<T>, p: &Bound<'_, T>, x: Var, prefix: &str) -> Result<Var> {
        let g = p.var(&format!("{prefix}.g"))?;
        let b = p.var(&format!("{prefix}.b"))?;
        Ok(tape.layer_norm(x, g, b)?)
    }

    fn self_attention<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        p: &Bound<'_, T>,
        x: Var,
        prefix: &str,
        maps: &mut Vec<Var>,
    ) -> Result<Var> {
        let q = Self::linear(tape, p, x, &format!("{prefix}.wq"), &format!("{prefix}.bq"))?;
        let k = tape.matmul(x, p.var(&format!("{prefix}.wk"))?)?;
        let v = Self::linear(tape, p, x, &format!("{prefix}.wv"), &format!("{prefix}.bv"))?;
        let dh = self.config.d_lm / self.config.n_heads;
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let mut heads = Vec::with_capacity(self.config.n_heads);
        for h in 0..self.config.n_heads {
            let (lo, hi) = (h * dh, (h + 1) * dh);
            let qh = tape.slice_cols(q, lo, hi)?;
            let kh = tape.slice_cols(k, lo, hi)?;
            let vh = tape.slice_cols(v, lo, hi)?;
            let kt = tape.transpose(kh)?;
            let scores = tape.matmul(qh, kt)?;
            let scores = tape.scale(scores, scale)?;
            let probs = tape.softmax(scores)?;
            maps.push(probs);
            heads.push(tape.matmul(probs, vh)?);
        }
        let joined = tape.concat(&heads)?;
        Self::linear(tape, p, joined, &format!("{prefix}.wo"), &format!("{prefix}.bo"))
    }
}

impl<T: Scalar> SequenceEncoder<T> for TransformerEncoder {
    fn d_model(&self) -> usize {
        self.config.d_lm
    }

    fn encode(&self, tape: &mut Tape<T>, p: &Bound<'_, T>, seq: &InputSequence) -> Result<EncodedVars> {
        let n = seq.len();
        let d = self.config.d_lm;
        if n == 0 || n > self.config.t_max {
            return Err(Error::InputTooLong {
                needed: n,
                t_max: self.config.t_max,
            });
        }
        if let Some(&id) = seq.token_ids.iter().find(|&&id| id >= self.vocab_size) {
            return Err(Error::TokenOutOfVocab {
                id,
                size: self.vocab_size,
            });
        }

        let tok = tape.gather_rows(p.var("enc.tok_emb")?, &seq.token_ids)?;
        let seg = tape.gather_rows(p.var("enc.seg_emb")?, &seq.segment_ids)?;
        let pos = Tensor::new(vec![n, d], self.positions[..n * d].iter().map(|&v| T::of(v)).collect())?;
        let pos = tape.constant(pos);
        let x = tape.add(tok, seg)?;
        let mut x = tape.add(x, pos)?;

        let mut attention = Vec::with_capacity(self.config.n_layers * self.config.n_heads);
        for l in 0..self.config.n_layers {
            let pre = format!("enc.l{l}");
            let h = Self::layer_norm(tape, p, x, &format!("{pre}.ln1"))?;
            let a = self.self_attention(tape, p, h, &format!("{pre}.attn"), &mut attention)?;
            x = tape.add(x, a)?;
            let h = Self::layer_norm(tape, p, x, &format!("{pre}.ln2"))?;
            let f = Self::linear(tape, p, h, &format!("{pre}.ffn.w1"), &format!("{pre}.ffn.b1"))?;
            let f = tape.relu(f)?;
            let f = Self::linear(tape, p, f, &format!("{pre}.ffn.w2"), &format!("{pre}.ffn.b2"))?;
            x = tape.add(x, f)?;
        }
        let tokens = Self::layer_norm(tape, p, x, "enc.ln_f")?;
        let cls = tape.gather_rows(tokens, &[0])?;
        Ok(EncodedVars {
            tokens,
            cls,
            attention,
        })
    }
}
