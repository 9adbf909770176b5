use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srlgnn_tensor::Precision;

use crate::corpus::{CorpusSchema, LabelSet, VotePolicy};
use crate::error::{Error, Result};
use crate::gnn::ModelConfig;

/// Label set for `"labels": "custom"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomLabels {
    pub labels: Vec<String>,
    /// Words used in the auxiliary sentence; defaults to the labels.
    #[serde(default)]
    pub words: Option<Vec<String>>,
    #[serde(default = "default_policy")]
    pub policy: VotePolicy,
}

fn default_policy() -> VotePolicy {
    VotePolicy::GoldFromFile
}

fn default_batch_size() -> usize {
    8
}

fn default_lr() -> f64 {
    5e-6
}

fn default_precision() -> Precision {
    Precision::F32
}

/// One experiment. Relative paths are resolved against the directory of
/// the config file by [`ExperimentConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srl: Option<PathBuf>,
    /// `iemocap4`, `friends8`, `friends4` or `custom`.
    pub labels: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_labels: Option<CustomLabels>,
    #[serde(default)]
    pub context_n: usize,
    /// Defaults to 9 for vote-based corpora and 11 for gold-label corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Path to a [`ModelConfig`] JSON file.
    pub model: PathBuf,
    /// Falls back to the model config's seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_precision")]
    pub precision: Precision,
    /// End training early once every training utterance is classified
    /// correctly.
    #[serde(default)]
    pub stop_at_train_accuracy: bool,
    /// Context sizes for `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<usize>>,
    /// Contents of `model`, filled in by [`ExperimentConfig::load`].
    #[serde(skip)]
    pub model_config: ModelConfig,
}

impl ExperimentConfig {
    /// Reads the config, resolves relative paths and loads the model
    /// config. File existence is checked by [`ExperimentConfig::validate`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        cfg.resolve_paths(&base);
        cfg.model_config = ModelConfig::load(&cfg.model)?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.train);
        fix(&mut self.model);
        for p in [&mut self.dev, &mut self.test, &mut self.srl].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn schema(&self) -> Result<CorpusSchema> {
        if self.labels != "custom" {
            return CorpusSchema::by_name(&self.labels);
        }
        let custom = self
            .custom_labels
            .as_ref()
            .ok_or_else(|| Error::Config("`labels: custom` needs a `custom_labels` object".into()))?;
        let words = custom.words.clone().unwrap_or_else(|| custom.labels.clone());
        let set = LabelSet::with_words(custom.labels.clone(), words)?;
        Ok(CorpusSchema::custom(set, custom.policy))
    }

    pub fn epochs(&self) -> Result<usize> {
        match self.epochs {
            Some(e) => Ok(e),
            None => Ok(match self.schema()?.policy {
                VotePolicy::Majority => 9,
                VotePolicy::GoldFromFile => 11,
            }),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(self.model_config.seed)
    }

    /// The split scored after training: test, else dev, else train.
    pub fn eval_corpus(&self) -> &Path {
        self.test.as_deref().or(self.dev.as_deref()).unwrap_or(&self.train)
    }

    pub fn validate(&self) -> Result<()> {
        self.schema()?;
        if self.epochs()? == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if let Some(values) = &self.sweep {
            if values.is_empty() {
                return Err(Error::Config("sweep needs at least one context size".into()));
            }
        }
        self.model_config.validate()?;
        let files = [Some(&self.train), self.dev.as_ref(), self.test.as_ref(), self.srl.as_ref()];
        for path in files.into_iter().flatten() {
            if !path.is_file() {
                return Err(Error::Config(format!("file not found: {}", path.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn relative_paths_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "model.json", r#"{"d_lm": 16, "seed": 3}"#);
        write(dir.path(), "train.jsonl", "");
        let cfg_path = write(
            dir.path(),
            "exp.json",
            r#"{"train": "train.jsonl", "labels": "iemocap4", "model": "model.json"}"#,
        );
        let cfg = ExperimentConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.train, dir.path().join("train.jsonl"));
        assert_eq!(cfg.model_config.d_lm, 16);
        assert_eq!(cfg.seed(), 3);
        assert_eq!(cfg.epochs().unwrap(), 9);
        assert_eq!(cfg.batch_size, 8);
        assert_eq!(cfg.lr, 5e-6);
        assert_eq!(cfg.eval_corpus(), dir.path().join("train.jsonl"));
        cfg.validate().unwrap();
    }

    #[test]
    fn missing_file_and_zero_epochs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "model.json", "{}");
        let cfg_path = write(
            dir.path(),
            "exp.json",
            r#"{"train": "nope.jsonl", "labels": "friends8", "model": "model.json", "epochs": 0}"#,
        );
        let mut cfg = ExperimentConfig::load(&cfg_path).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(m)) if m.contains("epochs")));
        cfg.epochs = None;
        assert_eq!(cfg.epochs().unwrap(), 11);
        assert!(matches!(cfg.validate(), Err(Error::Config(m)) if m.contains("nope.jsonl")));
    }

    #[test]
    fn custom_labels_need_a_definition() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "model.json", "{}");
        let cfg_path = write(
            dir.path(),
            "exp.json",
            r#"{"train": "t.jsonl", "labels": "custom", "model": "model.json"}"#,
        );
        let mut cfg = ExperimentConfig::load(&cfg_path).unwrap();
        assert!(cfg.schema().is_err());
        cfg.custom_labels = Some(CustomLabels {
            labels: vec!["pos".into(), "neg".into()],
            words: Some(vec!["positive".into(), "negative".into()]),
            policy: VotePolicy::GoldFromFile,
        });
        let schema = cfg.schema().unwrap();
        assert_eq!(schema.labels.word(1), "negative");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(
            r#"{"train": "t", "labels": "friends8", "model": "m", "learning_rate": 1}"#,
        );
        assert!(err.is_err());
    }
}
