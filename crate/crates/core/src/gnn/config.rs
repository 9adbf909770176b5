use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AttentionMode {
    /// `alpha = softmax(scores)`
    #[default]
    Softmax,
    /// `alpha_i = score_i / sum_j score_j`
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NeighborTransform {
    /// A learned `d_gcn x d_gcn` matrix applied to each neighbour.
    #[default]
    Learned,
    /// Neighbours are averaged untransformed.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl std::str::FromStr for AttentionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(Self::Softmax),
            "literal" => Ok(Self::Literal),
            _ => Err(Error::Config(format!("unknown attention mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub d_lm: usize,
    pub d_gcn: usize,
    pub n_gcn_layers: usize,
    pub n_enc_layers: usize,
    pub n_heads: usize,
    pub t_max: usize,
    pub attention_mode: AttentionMode,
    pub neighbor_transform: NeighborTransform,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_lm: 64,
            d_gcn: 32,
            n_gcn_layers: 1,
            n_enc_layers: 2,
            n_heads: 2,
            t_max: 128,
            attention_mode: AttentionMode::Softmax,
            neighbor_transform: NeighborTransform::Learned,
            activation: Activation::Relu,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            d_lm: self.d_lm,
            n_layers: self.n_enc_layers,
            n_heads: self.n_heads,
            t_max: self.t_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_gcn == 0 {
            return Err(Error::Config("d_gcn must be positive".into()));
        }
        self.encoder().validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// First field (in declaration order) where the two configs disagree,
    /// ignoring the initialization seed.
    pub fn first_difference(&self, other: &ModelConfig) -> Option<(&'static str, String, String)> {
        macro_rules! cmp {
            ($($f:ident),*) => {$(
                if self.$f != other.$f {
                    return Some((stringify!($f), format!("{:?}", self.$f), format!("{:?}", other.$f)));
                }
            )*};
        }
        cmp!(
            d_lm,
            d_gcn,
            n_gcn_layers,
            n_enc_layers,
            n_heads,
            t_max,
            attention_mode,
            neighbor_transform,
            activation
        );
        None
    }
}
