#!/usr/bin/env python3
"""Writes crates/core/fixtures/golden_inputs.json: the expected classifier
input for 20 windows of the IEMOCAP-style fixture.

Layout: [CLS] ctx_1 [SEP] ... ctx_k [SEP] target [SEP] that statement
expressed <word> [SEP]. Over the length limit, whole context utterances go
first (oldest first), then target tokens from the left. Segment 0 ends with
the target's [SEP].
"""

import json
import os
from collections import Counter

from make_fixtures import tokenize

FIX = os.path.join("crates", "core", "fixtures")
WORDS = {"ang": "anger", "hap": "happiness", "neu": "neutral", "sad": "sadness"}


def gold(votes):
    counts = Counter(votes).most_common()
    top, n = counts[0]
    if n < 2 or (len(counts) > 1 and counts[1][1] == n):
        return None
    return top if top in WORDS else None


def assemble(context, target, word, t_max):
    aux = ["that", "statement", "expressed"] + tokenize(word)
    ctx = [tokenize(t) for t in context]
    tgt = tokenize(target)
    while ctx and 1 + sum(len(c) + 1 for c in ctx) + len(tgt) + 1 + len(aux) + 1 > t_max:
        ctx.pop(0)
    size = 1 + sum(len(c) + 1 for c in ctx) + len(tgt) + 1 + len(aux) + 1
    dropped = max(0, size - t_max)
    tgt = tgt[dropped:]
    seg_a = ["[CLS]"]
    for c in ctx:
        seg_a += c + ["[SEP]"]
    start = len(seg_a)
    seg_a += tgt + ["[SEP]"]
    seg_b = aux + ["[SEP]"]
    return {
        "tokens": seg_a + seg_b,
        "segments": [0] * len(seg_a) + [1] * len(seg_b),
        "target_span": [start, start + len(tgt)],
        "target_dropped": dropped,
        "context_kept": len(ctx),
    }


def main():
    convs = {}
    with open(os.path.join(FIX, "iemocap_mini.jsonl")) as f:
        for line in f:
            r = json.loads(line)
            convs.setdefault(r["conv_id"], []).append(r)

    targets = []
    for conv, utts in convs.items():
        for i, u in enumerate(utts):
            g = gold(u["votes"])
            if g:
                targets.append((conv, i, u, g))

    cases = []
    # every target with two context utterances, no truncation
    for conv, i, u, g in targets:
        cases.append((conv, i, u, g, 2, 128))
    # length-limited cases: context dropped, then target cut
    picks = [(targets[6], 4, 32), (targets[13], 8, 30), (targets[9], 8, 12), (targets[2], 1, 9)]
    for (conv, i, u, g), n, t_max in picks:
        cases.append((conv, i, u, g, n, t_max))
    assert len(cases) == 20

    out = []
    for conv, i, u, g, n, t_max in cases:
        utts = convs[conv]
        context = [c["text"] for c in utts[max(0, i - n) : i]]
        expected = assemble(context, u["text"], WORDS[g], t_max)
        out.append(
            {
                "conv_id": conv,
                "utt_id": u["utt_id"],
                "context_n": n,
                "t_max": t_max,
                "label": g,
                "word": WORDS[g],
                **expected,
            }
        )
    with open(os.path.join(FIX, "golden_inputs.json"), "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")
    print(f"golden_inputs: {len(out)} windows, {sum(1 for c in out if c['target_dropped'])} with the target cut")


if __name__ == "__main__":
    main()
