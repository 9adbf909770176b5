use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Conversation;
use crate::encoder::tokenize;
use crate::error::{Error, Result};

/// Half-open token range `[start, end)` over an utterance's tokens.
/// Serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// `self` lies inside `other` and the two differ.
    pub fn strictly_within(&self, other: &Span) -> bool {
        self != other && other.start <= self.start && self.end <= other.end
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Self { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlFrame {
    pub predicate: Span,
    pub arguments: Vec<Span>,
}

impl SrlFrame {
    pub fn spans(&self) -> impl Iterator<Item = Span> + '_ {
        std::iter::once(self.predicate).chain(self.arguments.iter().copied())
    }

    /// Every span must be non-empty and end within `token_count`.
    pub fn validate(&self, key: &str, token_count: usize) -> Result<()> {
        for span in self.spans() {
            if span.is_empty() || span.end > token_count {
                return Err(Error::SpanOutOfRange {
                    key: key.to_string(),
                    start: span.start,
                    end: span.end,
                    token_count,
                });
            }
        }
        Ok(())
    }
}

/// `"<conv_id>/<utt_id>"`, the annotation file's key format.
pub fn srl_key(conv_id: &str, utt_id: &str) -> String {
    format!("{conv_id}/{utt_id}")
}

/// Frames per `(conv_id, utt_id)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SrlAnnotations {
    frames: BTreeMap<(String, String), Vec<SrlFrame>>,
}

impl SrlAnnotations {
    pub fn get(&self, conv_id: &str, utt_id: &str) -> Option<&[SrlFrame]> {
        self.frames
            .get(&(conv_id.to_string(), utt_id.to_string()))
            .map(Vec::as_slice)
    }

    pub fn insert(&mut self, conv_id: &str, utt_id: &str, frames: Vec<SrlFrame>) {
        self.frames
            .insert((conv_id.to_string(), utt_id.to_string()), frames);
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &[SrlFrame])> {
        self.frames
            .iter()
            .map(|((c, u), f)| (c.as_str(), u.as_str(), f.as_slice()))
    }

    /// Checks every frame against the tokenization of its utterance.
    pub fn validate(&self, corpus: &[Conversation]) -> Result<()> {
        let counts: HashMap<(&str, &str), usize> = corpus
            .iter()
            .flat_map(|c| {
                c.utterances
                    .iter()
                    .map(move |u| ((c.id.as_str(), u.id.as_str()), tokenize(&u.text).len()))
            })
            .collect();
        for ((conv, utt), frames) in &self.frames {
            let key = srl_key(conv, utt);
            let count = *counts
                .get(&(conv.as_str(), utt.as_str()))
                .ok_or_else(|| Error::UnknownUtterance(key.clone()))?;
            for frame in frames {
                frame.validate(&key, count)?;
            }
        }
        Ok(())
    }
}

/// Reads an SRL annotation file. With a corpus, every frame is checked
/// against its utterance's token count; without one, only span shape is
/// checked and range checks are left to graph construction.
pub fn parse_srl_file(path: impl AsRef<Path>, corpus: Option<&[Conversation]>) -> Result<SrlAnnotations> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let raw: BTreeMap<String, Vec<SrlFrame>> =
        serde_json::from_str(&text).map_err(|e| Error::MalformedSrl(format!("{}: {e}", path.display())))?;
    let mut out = SrlAnnotations::default();
    for (key, frames) in raw {
        let (conv, utt) = key
            .split_once('/')
            .ok_or_else(|| Error::MalformedSrl(format!("key `{key}` is not of the form conv_id/utt_id")))?;
        for frame in &frames {
            frame.validate(&key, usize::MAX)?;
        }
        out.insert(conv, utt, frames);
    }
    if let Some(corpus) = corpus {
        out.validate(corpus)?;
    }
    Ok(out)
}

/// Parses a bare JSON list of frames, as accepted inline on the command
/// line, and checks it against `token_count`.
pub fn parse_frames(json: &str, token_count: usize) -> Result<Vec<SrlFrame>> {
    let frames: Vec<SrlFrame> = serde_json::from_str(json).map_err(|e| Error::MalformedSrl(e.to_string()))?;
    for frame in &frames {
        frame.validate("inline", token_count)?;
    }
    Ok(frames)
}
