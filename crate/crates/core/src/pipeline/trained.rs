use std::fs;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use srlgnn_tensor::{read_header, Checkpoint, ParamStore, Precision, Scalar};

use super::data::Example;
use crate::corpus::{ContextWindow, LabelSet};
use crate::encoder::{TransformerEncoder, Vocab};
use crate::error::{Error, Result};
use crate::gnn::{Classification, ModelConfig, SrlGnn};
use crate::srl::PaGraph;

/// One line of the prediction dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub conv_id: String,
    pub utt_id: String,
    pub gold: String,
    pub pred: String,
    pub logits: IndexMap<String, f64>,
}

pub fn write_predictions(path: &Path, preds: &[Prediction]) -> Result<()> {
    let mut out = Vec::new();
    for p in preds {
        serde_json::to_writer(&mut out, p)?;
        out.push(b'\n');
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(Error::io(path))
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Parameters at either precision.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    F32(ParamStore<f32>),
    F64(ParamStore<f64>),
}

impl Params {
    pub fn precision(&self) -> Precision {
        match self {
            Params::F32(_) => Precision::F32,
            Params::F64(_) => Precision::F64,
        }
    }
}

/// A model together with its parameters; everything needed to classify.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: SrlGnn<TransformerEncoder>,
    pub params: Params,
}

pub(crate) fn build_model(config: ModelConfig, vocab: Vocab, labels: LabelSet) -> Result<SrlGnn<TransformerEncoder>> {
    let encoder = TransformerEncoder::new(config.encoder(), vocab.len())?;
    Ok(SrlGnn::new(config, encoder, vocab, labels))
}

/// Classifies every example in parallel; output order follows `examples`.
pub(crate) fn predict_with<T: Scalar>(
    model: &SrlGnn<TransformerEncoder>,
    params: &ParamStore<T>,
    examples: &[Example],
) -> Result<Vec<Prediction>> {
    examples
        .par_iter()
        .map(|ex| {
            let c = model.classify(params, &ex.window, ex.graph.as_ref())?;
            Ok(Prediction {
                conv_id: ex.window.conv_id.clone(),
                utt_id: ex.window.target.id.clone(),
                gold: ex.window.target.gold.clone().unwrap_or_default(),
                pred: c.predicted,
                logits: c.logits,
            })
        })
        .collect()
}

fn meta<'a>(metadata: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    metadata
        .get(key)
        .ok_or_else(|| Error::Config(format!("checkpoint metadata lacks `{key}`")))
}

impl TrainedModel {
    pub fn precision(&self) -> Precision {
        self.params.precision()
    }

    pub fn labels(&self) -> &LabelSet {
        &self.model.labels
    }

    fn metadata(&self) -> Map<String, Value> {
        let m = &self.model;
        let mut out = Map::new();
        out.insert("model".into(), serde_json::to_value(m.config).expect("config serializes"));
        out.insert("labels".into(), m.labels.labels().into());
        out.insert("label_words".into(), m.labels.words().into());
        out.insert("vocab".into(), m.vocab.tokens().into());
        out
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let metadata = self.metadata();
        let bytes = match &self.params {
            Params::F32(p) => Checkpoint {
                params: p.clone(),
                metadata,
            }
            .to_bytes()?,
            Params::F64(p) => Checkpoint {
                params: p.clone(),
                metadata,
            }
            .to_bytes()?,
        };
        Ok(bytes)
    }

    /// Restores a model at the precision it was saved with.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = read_header(bytes)?;
        let md = &header.metadata;
        let config: ModelConfig = serde_json::from_value(meta(md, "model")?.clone())?;
        let labels: Vec<String> = serde_json::from_value(meta(md, "labels")?.clone())?;
        let words: Vec<String> = serde_json::from_value(meta(md, "label_words")?.clone())?;
        let tokens: Vec<String> = serde_json::from_value(meta(md, "vocab")?.clone())?;
        let model = build_model(config, Vocab::from_tokens(tokens)?, LabelSet::with_words(labels, words)?)?;
        let params = match header.precision {
            Precision::F32 => Params::F32(Checkpoint::<f32>::from_bytes(bytes)?.params),
            Precision::F64 => Params::F64(Checkpoint::<f64>::from_bytes(bytes)?.params),
        };
        Ok(Self { model, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        fs::write(path, bytes).map_err(Error::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(Error::io(path))?;
        Self::from_bytes(&bytes)
    }

    /// Fails with the first differing field when the checkpoint was
    /// trained under another model config or label set.
    pub fn check_compatible(&self, config: &ModelConfig, labels: &LabelSet) -> Result<()> {
        if let Some((field, ours, theirs)) = self.model.config.first_difference(config) {
            return Err(Error::ConfigMismatch {
                field: field.into(),
                checkpoint: ours,
                config: theirs,
            });
        }
        if self.model.labels.labels() != labels.labels() {
            return Err(Error::ConfigMismatch {
                field: "labels".into(),
                checkpoint: self.model.labels.labels().join(","),
                config: labels.labels().join(","),
            });
        }
        Ok(())
    }

    pub fn classify(&self, window: &ContextWindow, graph: Option<&PaGraph>) -> Result<Classification> {
        match &self.params {
            Params::F32(p) => self.model.classify(p, window, graph),
            Params::F64(p) => self.model.classify(p, window, graph),
        }
    }

    pub fn predict(&self, examples: &[Example]) -> Result<Vec<Prediction>> {
        match &self.params {
            Params::F32(p) => predict_with(&self.model, p, examples),
            Params::F64(p) => predict_with(&self.model, p, examples),
        }
    }
}
