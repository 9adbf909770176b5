use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered emotion labels. A label's ordinal is its position, which also
/// decides argmax ties.
///
/// Each label carries the surface word that is substituted into the
/// auxiliary sentence; for most label sets the word is the label itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<String>,
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let words = labels.clone();
        Self::with_words(labels, words)
    }

    pub fn with_words(labels: Vec<String>, words: Vec<String>) -> Result<Self> {
        if labels.len() != words.len() {
            return Err(Error::LabelSet("every label needs exactly one word".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.trim().is_empty() {
                return Err(Error::LabelSet("empty label".into()));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::LabelSet(format!("duplicate label `{label}`")));
            }
        }
        Ok(Self {
            labels,
            words,
            index,
        })
    }

    /// anger, happiness, neutral, sadness under their IEMOCAP codes.
    pub fn iemocap4() -> Self {
        Self::with_words(
            ["ang", "hap", "neu", "sad"].map(String::from).to_vec(),
            ["anger", "happiness", "neutral", "sadness"]
                .map(String::from)
                .to_vec(),
        )
        .expect("static label set")
    }

    /// Every category an IEMOCAP annotator may assign.
    pub fn iemocap_votes() -> Self {
        Self::with_words(
            ["neu", "hap", "sad", "ang", "sur", "fea", "dis", "fru", "exc", "oth"]
                .map(String::from)
                .to_vec(),
            [
                "neutral",
                "happiness",
                "sadness",
                "anger",
                "surprise",
                "fear",
                "disgust",
                "frustration",
                "excited",
                "other",
            ]
            .map(String::from)
            .to_vec(),
        )
        .expect("static label set")
    }

    pub fn friends8() -> Self {
        Self::new([
            "non-neutral",
            "neutral",
            "joy",
            "sadness",
            "anger",
            "disgust",
            "fear",
            "surprise",
        ])
        .expect("static label set")
    }

    pub fn friends4() -> Self {
        Self::new(["neutral", "joy", "sadness", "anger"]).expect("static label set")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ordinal(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn label(&self, ordinal: usize) -> &str {
        &self.labels[ordinal]
    }

    /// Word substituted for the emotion slot of the auxiliary sentence.
    pub fn word(&self, ordinal: usize) -> &str {
        &self.words[ordinal]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }
}

/// How an utterance's gold label is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotePolicy {
    /// The file carries the final label (Friends-style corpora).
    GoldFromFile,
    /// Gold is the strict plurality of annotator votes with at least two
    /// votes (IEMOCAP-style corpora).
    Majority,
}

/// What a corpus file may contain and which labels are classification
/// targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSchema {
    pub name: String,
    /// Labels the classifier predicts.
    pub labels: LabelSet,
    /// Every label allowed to appear in the file (votes or gold). A superset
    /// of `labels`.
    pub vocabulary: LabelSet,
    pub policy: VotePolicy,
}

impl CorpusSchema {
    pub fn iemocap4() -> Self {
        Self {
            name: "iemocap4".into(),
            labels: LabelSet::iemocap4(),
            vocabulary: LabelSet::iemocap_votes(),
            policy: VotePolicy::Majority,
        }
    }

    pub fn friends8() -> Self {
        Self {
            name: "friends8".into(),
            labels: LabelSet::friends8(),
            vocabulary: LabelSet::friends8(),
            policy: VotePolicy::GoldFromFile,
        }
    }

    pub fn friends4() -> Self {
        Self {
            name: "friends4".into(),
            labels: LabelSet::friends4(),
            vocabulary: LabelSet::friends8(),
            policy: VotePolicy::GoldFromFile,
        }
    }

    pub fn custom(labels: LabelSet, policy: VotePolicy) -> Self {
        Self {
            name: "custom".into(),
            vocabulary: labels.clone(),
            labels,
            policy,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "iemocap4" => Ok(Self::iemocap4()),
            "friends8" => Ok(Self::friends8()),
            "friends4" => Ok(Self::friends4()),
            other => Err(Error::LabelSet(format!(
                "unknown label set `{other}` (expected iemocap4, friends8, friends4 or custom)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals_follow_order() {
        let set = LabelSet::iemocap4();
        assert_eq!(set.len(), 4);
        assert_eq!(set.ordinal("neu"), Some(2));
        assert_eq!(set.word(0), "anger");
        assert_eq!(set.ordinal("fru"), None);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(LabelSet::new(["a", "b", "a"]).is_err());
        assert!(LabelSet::new(["a", " "]).is_err());
    }

    #[test]
    fn friends_has_eight_categories() {
        assert_eq!(LabelSet::friends8().len(), 8);
        let s = CorpusSchema::friends4();
        assert!(s.labels.iter().all(|l| s.vocabulary.contains(l)));
    }

    #[test]
    fn iemocap_vocabulary_covers_targets() {
        let s = CorpusSchema::iemocap4();
        assert_eq!(s.vocabulary.len(), 10);
        assert!(s.labels.iter().all(|l| s.vocabulary.contains(l)));
        assert!(CorpusSchema::by_name("nope").is_err());
    }
}
