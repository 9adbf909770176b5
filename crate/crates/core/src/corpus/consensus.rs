use super::{Conversation, LabelSet};

/// The label with a strict plurality of at least two votes, if any.
pub fn consensus_label(votes: &[String]) -> Option<&str> {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for v in votes {
        match counts.iter_mut().find(|(l, _)| *l == v.as_str()) {
            Some((_, c)) => *c += 1,
            None => counts.push((v.as_str(), 1)),
        }
    }
    let best = counts.iter().map(|&(_, c)| c).max()?;
    let mut winners = counts.iter().filter(|&&(_, c)| c == best);
    let (label, _) = *winners.next()?;
    if best < 2 || winners.next().is_some() {
        return None;
    }
    Some(label)
}

/// Keeps every utterance but sets gold to the consensus label when it exists
/// and is in `keep`, clearing it otherwise.
pub fn annotate_consensus(conv: &Conversation, keep: &LabelSet) -> Conversation {
    let mut out = conv.clone();
    for u in &mut out.utterances {
        u.gold = consensus_label(&u.votes)
            .filter(|l| keep.contains(l))
            .map(str::to_string);
    }
    out
}

/// Drops utterances without a usable consensus label; survivors keep their
/// order and get the consensus label as gold.
pub fn consensus_filter(conv: &Conversation, keep: &LabelSet) -> Conversation {
    let mut out = annotate_consensus(conv, keep);
    out.utterances.retain(|u| u.gold.is_some());
    out
}
