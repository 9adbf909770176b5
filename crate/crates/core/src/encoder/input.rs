use std::ops::Range;

use super::tokenize::tokenize;
use super::vocab::Vocab;
use crate::corpus::ContextWindow;
use crate::error::{Error, Result};

/// Auxiliary sentence; `[EMOTION]` is replaced by the candidate label's word.
pub const AUX_TEMPLATE: &str = "That statement expressed [EMOTION]";

/// `[CLS] ctx_1 [SEP] ... ctx_k [SEP] target [SEP] aux [SEP]`
///
/// Segment 0 runs from `[CLS]` through the target's `[SEP]`, segment 1
/// covers the auxiliary sentence and the final `[SEP]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSequence {
    pub token_ids: Vec<usize>,
    pub segment_ids: Vec<usize>,
    /// Positions holding the (possibly truncated) target utterance.
    pub target_span: Range<usize>,
    /// Target tokens removed from the left to fit the length limit.
    pub target_dropped: usize,
    /// Context utterances that survived truncation.
    pub context_kept: usize,
}

impl InputSequence {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

/// Tokens of the auxiliary sentence for one emotion word.
pub fn aux_tokens(emotion_word: &str) -> Vec<String> {
    let (head, tail) = AUX_TEMPLATE
        .split_once("[EMOTION]")
        .expect("template has an emotion slot");
    let mut tokens = tokenize(head);
    tokens.extend(tokenize(emotion_word));
    tokens.extend(tokenize(tail));
    tokens
}

/// Assembles the classifier input for one candidate emotion.
///
/// When the sequence exceeds `t_max`, the oldest context utterances go
/// first, then tokens from the start of the target. The auxiliary sentence
/// is never cut; if it cannot fit next to at least one target token the
/// input is rejected.
pub fn build_input(window: &ContextWindow, emotion_word: &str, vocab: &Vocab, t_max: usize) -> Result<InputSequence> {
    let context: Vec<Vec<String>> = window.context.iter().map(|u| tokenize(&u.text)).collect();
    let target = tokenize(&window.target.text);
    let aux = aux_tokens(emotion_word);

    // [CLS] + target [SEP] + aux + [SEP]
    let fixed = 1 + 1 + aux.len() + 1;
    let mut total = fixed + target.len() + context.iter().map(|c| c.len() + 1).sum::<usize>();
    let mut first_ctx = 0;
    while total > t_max && first_ctx < context.len() {
        total -= context[first_ctx].len() + 1;
        first_ctx += 1;
    }
    let mut target_dropped = 0;
    if total > t_max {
        if t_max < fixed + 1 {
            return Err(Error::InputTooLong {
                needed: fixed + 1,
                t_max,
            });
        }
        target_dropped = total - t_max;
    }

    let mut token_ids = Vec::with_capacity(total);
    token_ids.push(vocab.cls_id());
    for utt in &context[first_ctx..] {
        token_ids.extend(utt.iter().map(|t| vocab.id(t)));
        token_ids.push(vocab.sep_id());
    }
    let start = token_ids.len();
    token_ids.extend(target[target_dropped..].iter().map(|t| vocab.id(t)));
    let target_span = start..token_ids.len();
    token_ids.push(vocab.sep_id());
    let segment_a = token_ids.len();
    token_ids.extend(aux.iter().map(|t| vocab.id(t)));
    token_ids.push(vocab.sep_id());

    let mut segment_ids = vec![0; segment_a];
    segment_ids.resize(token_ids.len(), 1);
    Ok(InputSequence {
        token_ids,
        segment_ids,
        target_span,
        target_dropped,
        context_kept: context.len() - first_ctx,
    })
}
