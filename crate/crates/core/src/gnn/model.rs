use indexmap::IndexMap;
use serde::Serialize;
use srlgnn_tensor::{Bound, ParamStore, Scalar, Tape, Var};

use super::config::ModelConfig;
use super::layers::{attention_readout, binary_head, propagate};
use crate::corpus::{ContextWindow, LabelSet};
use crate::encoder::{build_input, SequenceEncoder, Vocab};
use crate::error::{Error, Result};
use crate::srl::PaGraph;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.map_or(true, |b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Tape handles for one candidate emotion.
#[derive(Debug, Clone, Copy)]
pub struct EmotionForward {
    /// `[1, 1]`
    pub logit: Var,
    /// `[1, n_nodes]`, absent when the graph is empty.
    pub alpha: Option<Var>,
    /// `[1, d_gcn]`
    pub graph_embedding: Var,
    /// `[1, d_lm]`
    pub cls: Var,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub logits: IndexMap<String, f64>,
    pub predicted: String,
    pub alphas: IndexMap<String, Vec<f64>>,
}

/// Encoder + graph network + binary head, shared across all candidate
/// emotions; only the auxiliary sentence differs between them.
#[derive(Debug, Clone)]
pub struct SrlGnn<E> {
    pub config: ModelConfig,
    pub encoder: E,
    pub vocab: Vocab,
    pub labels: LabelSet,
    /// Ignore all SRL structure, as if every utterance had no frames.
    pub force_empty_graph: bool,
}

impl<E> SrlGnn<E> {
    pub fn new(config: ModelConfig, encoder: E, vocab: Vocab, labels: LabelSet) -> Self {
        Self {
            config,
            encoder,
            vocab,
            labels,
            force_empty_graph: false,
        }
    }

    pub fn emotion_forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        p: &Bound<'_, T>,
        window: &ContextWindow,
        graph: Option<&PaGraph>,
        label: usize,
    ) -> Result<EmotionForward>
    where
        E: SequenceEncoder<T>,
    {
        let word = self.labels.word(label);
        let seq = build_input(window, word, &self.vocab, self.config.t_max)?;
        let enc = self.encoder.encode(tape, p, &seq)?;

        let graph = match graph {
            Some(g) if !self.force_empty_graph => {
                let cut = g.without_leading_tokens(seq.target_dropped);
                // the truncation is identical for every label, so report it once
                if label == 0 && cut.len() < g.len() {
                    log::warn!(
                        "{}/{}: truncation removed {} of {} graph nodes",
                        window.conv_id,
                        window.target.id,
                        g.len() - cut.len(),
                        g.len()
                    );
                }
                cut
            }
            _ => PaGraph::empty(seq.target_span.len()),
        };

        let nodes = propagate(tape, p, enc.tokens, &graph, &seq.target_span, &self.config)?;
        let readout = attention_readout(tape, p, nodes, enc.cls, &self.config)?;
        let logit = binary_head(tape, p, enc.cls, readout.graph)?;
        Ok(EmotionForward {
            logit,
            alpha: readout.alpha,
            graph_embedding: readout.graph,
            cls: enc.cls,
        })
    }

    /// One forward pass per label, in label order.
    pub fn window_forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        p: &Bound<'_, T>,
        window: &ContextWindow,
        graph: Option<&PaGraph>,
    ) -> Result<Vec<EmotionForward>>
    where
        E: SequenceEncoder<T>,
    {
        (0..self.labels.len())
            .map(|label| self.emotion_forward(tape, p, window, graph, label))
            .collect()
    }

    /// Sum of the one-vs-all binary cross-entropies: target 1 for the gold
    /// label, 0 for every other. Returns the loss and the per-label logits.
    pub fn window_loss<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        p: &Bound<'_, T>,
        window: &ContextWindow,
        graph: Option<&PaGraph>,
    ) -> Result<(Var, Vec<Var>)>
    where
        E: SequenceEncoder<T>,
    {
        let gold = window
            .target
            .gold
            .as_deref()
            .and_then(|g| self.labels.ordinal(g))
            .ok_or_else(|| Error::MissingGold {
                conv_id: window.conv_id.clone(),
                utt_id: window.target.id.clone(),
            })?;
        let outs = self.window_forward(tape, p, window, graph)?;
        let mut loss: Option<Var> = None;
        for (i, out) in outs.iter().enumerate() {
            let target = if i == gold { T::one() } else { T::zero() };
            let l = tape.bce_with_logits(out.logit, target)?;
            loss = Some(match loss {
                Some(acc) => tape.add(acc, l)?,
                None => l,
            });
        }
        let loss = loss.ok_or_else(|| Error::LabelSet("empty label set".into()))?;
        Ok((loss, outs.iter().map(|o| o.logit).collect()))
    }

    /// Inference with frozen parameters.
    pub fn classify<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        window: &ContextWindow,
        graph: Option<&PaGraph>,
    ) -> Result<Classification>
    where
        E: SequenceEncoder<T>,
    {
        let mut tape = Tape::new();
        let bound = params.bind_frozen(&mut tape);
        let outs = self.window_forward(&mut tape, &bound, window, graph)?;
        let raw: Vec<f64> = outs.iter().map(|o| tape.value(o.logit).data()[0].as_f64()).collect();
        let best = argmax_first(&raw).ok_or_else(|| Error::LabelSet("empty label set".into()))?;
        let mut logits = IndexMap::new();
        let mut alphas = IndexMap::new();
        for (i, out) in outs.iter().enumerate() {
            let name = self.labels.label(i).to_string();
            logits.insert(name.clone(), raw[i]);
            let alpha = out
                .alpha
                .map(|a| tape.value(a).data().iter().map(|v| v.as_f64()).collect())
                .unwrap_or_default();
            alphas.insert(name, alpha);
        }
        Ok(Classification {
            logits,
            predicted: self.labels.label(best).to_string(),
            alphas,
        })
    }
}
