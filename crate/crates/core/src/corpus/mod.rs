//! Conversational emotion corpora: JSONL loading and saving, consensus
//! filtering, context windows and accuracy metrics.
//!
//! A corpus file holds one utterance per line:
//!
//! ```text
//! {"conv_id": "c1", "utt_id": "u1", "speaker": "A", "text": "Hi.", "votes": ["neu", "neu", "hap"]}
//! ```
//!
//! `votes` and `gold` are optional. Lines of one conversation are contiguous
//! and in temporal order.

mod consensus;
mod labels;
mod metrics;
mod window;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use consensus::{annotate_consensus, consensus_filter, consensus_label};
pub use labels::{CorpusSchema, LabelSet, VotePolicy};
pub use metrics::{compute_metrics, Metrics};
pub use window::{make_windows, ContextWindow};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub text: String,
    pub votes: Vec<String>,
    pub gold: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub utterances: Vec<Utterance>,
}

impl Conversation {
    pub fn targets(&self) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().filter(|u| u.gold.is_some())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    conv_id: String,
    utt_id: String,
    speaker: String,
    text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    votes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold: Option<String>,
}

/// Loads a JSONL corpus, validating every label against the schema's
/// vocabulary. Gold labels are taken verbatim; use [`prepare_targets`] to
/// apply the schema's vote policy.
pub fn load_corpus(path: impl AsRef<Path>, schema: &CorpusSchema) -> Result<Vec<Conversation>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse_corpus(&text, path, schema)
}

pub(crate) fn parse_corpus(text: &str, path: &Path, schema: &CorpusSchema) -> Result<Vec<Conversation>> {
    let mut conversations: Vec<Conversation> = Vec::new();
    let mut seen_convs = std::collections::HashSet::new();
    let mut seen_utts = std::collections::HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(raw).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if rec.text.trim().is_empty() {
            return Err(Error::EmptyText {
                path: path.to_path_buf(),
                line,
            });
        }
        for label in rec.votes.iter().chain(rec.gold.iter()) {
            if !schema.vocabulary.contains(label) {
                return Err(Error::UnknownLabel {
                    path: path.to_path_buf(),
                    line,
                    label: label.clone(),
                });
            }
        }

        let continues = conversations.last().is_some_and(|c| c.id == rec.conv_id);
        if !continues {
            if !seen_convs.insert(rec.conv_id.clone()) {
                return Err(Error::NonContiguousConversation {
                    path: path.to_path_buf(),
                    line,
                    conv_id: rec.conv_id,
                });
            }
            seen_utts.clear();
            conversations.push(Conversation {
                id: rec.conv_id.clone(),
                utterances: Vec::new(),
            });
        }
        if !seen_utts.insert(rec.utt_id.clone()) {
            return Err(Error::DuplicateUtterance {
                path: path.to_path_buf(),
                line,
                conv_id: rec.conv_id,
                utt_id: rec.utt_id,
            });
        }
        conversations
            .last_mut()
            .expect("pushed above")
            .utterances
            .push(Utterance {
                id: rec.utt_id,
                speaker: rec.speaker,
                text: rec.text,
                votes: rec.votes,
                gold: rec.gold,
            });
    }
    Ok(conversations)
}

pub fn save_corpus(path: impl AsRef<Path>, conversations: &[Conversation]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for conv in conversations {
        for u in &conv.utterances {
            let rec = Record {
                conv_id: conv.id.clone(),
                utt_id: u.id.clone(),
                speaker: u.speaker.clone(),
                text: u.text.clone(),
                votes: u.votes.clone(),
                gold: u.gold.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.push(b'\n');
        }
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(Error::io(path))
}

/// Marks classification targets according to the schema: under the
/// majority policy gold becomes the consensus label, under the file policy
/// gold is kept when it is one of the target labels. Every utterance stays
/// in place so it can still serve as context.
pub fn prepare_targets(conv: &Conversation, schema: &CorpusSchema) -> Conversation {
    match schema.policy {
        VotePolicy::Majority => annotate_consensus(conv, &schema.labels),
        VotePolicy::GoldFromFile => {
            let mut out = conv.clone();
            for u in &mut out.utterances {
                if u.gold.as_deref().is_some_and(|g| !schema.labels.contains(g)) {
                    u.gold = None;
                }
            }
            out
        }
    }
}
