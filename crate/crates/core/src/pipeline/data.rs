use std::path::Path;

use crate::corpus::{
    load_corpus, make_windows, prepare_targets, ContextWindow, Conversation, CorpusSchema, LabelSet,
};
use crate::encoder::{aux_tokens, tokenize, Vocab};
use crate::error::Result;
use crate::srl::{build_graph, srl_key, PaGraph, SrlAnnotations};

/// A classification target with its context and predicate-argument graph.
/// `graph` is `None` when the SRL file has no entry for the utterance.
#[derive(Debug, Clone)]
pub struct Example {
    pub window: ContextWindow,
    pub graph: Option<PaGraph>,
}

/// Windows for every target of a corpus split.
#[derive(Debug, Clone)]
pub struct Split {
    pub conversations: Vec<Conversation>,
    pub examples: Vec<Example>,
    pub missing_srl: usize,
}

/// Loads a corpus, marks its targets under the schema's vote policy and
/// pairs each target window with its graph. Context windows are cut from
/// the full conversation, including utterances that are not targets.
pub fn load_split(
    path: &Path,
    schema: &CorpusSchema,
    srl: Option<&SrlAnnotations>,
    context_n: usize,
) -> Result<Split> {
    let conversations: Vec<Conversation> = load_corpus(path, schema)?
        .iter()
        .map(|c| prepare_targets(c, schema))
        .collect();
    // spans of context-only utterances are checked too, so a bad file fails
    // the same way whatever the context size
    if let Some(srl) = srl {
        for conv in &conversations {
            for u in &conv.utterances {
                if let Some(frames) = srl.get(&conv.id, &u.id) {
                    let token_count = tokenize(&u.text).len();
                    for f in frames {
                        f.validate(&srl_key(&conv.id, &u.id), token_count)?;
                    }
                }
            }
        }
    }
    let mut examples = Vec::new();
    let mut missing = 0;
    for conv in &conversations {
        for window in make_windows(conv, context_n) {
            let graph = match srl.and_then(|s| s.get(&conv.id, &window.target.id)) {
                Some(frames) => Some(build_graph(frames, tokenize(&window.target.text).len())),
                None => {
                    missing += 1;
                    None
                }
            };
            examples.push(Example { window, graph });
        }
    }
    if missing > 0 {
        log::warn!(
            "{}: {missing} of {} targets have no SRL annotation and use an empty graph",
            path.display(),
            examples.len()
        );
    }
    Ok(Split {
        conversations,
        examples,
        missing_srl: missing,
    })
}

/// Every token of the training text plus the auxiliary sentence and the
/// label words. Tokens seen only at evaluation time map to `[UNK]`.
pub fn build_vocab(train: &[Conversation], labels: &LabelSet) -> Vocab {
    let mut vocab = Vocab::new();
    for conv in train {
        for u in &conv.utterances {
            for t in tokenize(&u.text) {
                vocab.add(&t);
            }
        }
    }
    for word in labels.words() {
        for t in aux_tokens(word) {
            vocab.add(&t);
        }
    }
    vocab
}
