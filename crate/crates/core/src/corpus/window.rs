use super::{Conversation, Utterance};

/// A target utterance with up to `n_requested` immediately preceding
/// utterances, oldest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextWindow {
    pub conv_id: String,
    pub target: Utterance,
    pub context: Vec<Utterance>,
    pub n_requested: usize,
}

/// One window per gold-labelled utterance. Context is drawn from every
/// utterance of `conv`, labelled or not.
pub fn make_windows(conv: &Conversation, n: usize) -> Vec<ContextWindow> {
    conv.utterances
        .iter()
        .enumerate()
        .filter(|(_, u)| u.gold.is_some())
        .map(|(i, u)| ContextWindow {
            conv_id: conv.id.clone(),
            target: u.clone(),
            context: conv.utterances[i.saturating_sub(n)..i].to_vec(),
            n_requested: n,
        })
        .collect()
}
