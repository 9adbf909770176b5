#!/usr/bin/env python3
"""Writes the synthetic corpora and SRL files under crates/core/fixtures.

Frames are written as phrases and located in the target's tokens, so the
spans always agree with the tokenizer below (a copy of the Rust one).
Run from the repository root; the output is deterministic.
"""

import json
import os
from collections import Counter

OUT = os.path.join("crates", "core", "fixtures")


def tokenize(text):
    tokens = []
    for chunk in text.split():
        chunk = chunk.lower()
        punct = [not c.isalnum() for c in chunk]
        lead = 0
        while lead < len(chunk) and punct[lead]:
            lead += 1
        if lead == len(chunk):
            tokens.extend(chunk)
            continue
        trail = 0
        while punct[len(chunk) - 1 - trail]:
            trail += 1
        tokens.extend(chunk[:lead])
        tokens.append(chunk[lead : len(chunk) - trail])
        tokens.extend(chunk[len(chunk) - trail :])
    return tokens


def locate(tokens, phrase):
    want = tokenize(phrase)
    for i in range(len(tokens) - len(want) + 1):
        if tokens[i : i + len(want)] == want:
            return [i, i + len(want)]
    raise ValueError(f"{phrase!r} not in {tokens}")


def frames_for(text, frames):
    toks = tokenize(text)
    return [
        {"predicate": locate(toks, pred), "arguments": [locate(toks, a) for a in args]}
        for pred, args in frames
    ]


# (speaker, text, votes, frames); frames are (predicate, [arguments]).
IEMOCAP = {
    "Ses01_a": [
        ("F", "Where were you last night?", ["neu", "fru", "fru"], [("were", ["you", "last night"])]),
        ("M", "I finally got the job offer today!", ["hap", "hap", "exc"], [("got", ["I", "the job offer", "today"])]),
        ("F", "That is wonderful news, I am so proud.", ["hap", "hap", "hap"], [("is", ["That", "wonderful news"]), ("am", ["I", "so proud"])]),
        ("M", "You never listen to a single word I say.", ["ang", "ang", "fru"], [("listen", ["You", "never", "to a single word I say"]), ("say", ["I"])]),
        ("F", "Fine, whatever.", ["fru", "fru", "ang"], []),
    ],
    "Ses01_b": [
        ("M", "The train leaves at nine tomorrow.", ["neu", "neu", "neu"], [("leaves", ["The train", "at nine", "tomorrow"])]),
        ("F", "My grandmother passed away last week.", ["sad", "sad", "neu"], [("passed away", ["My grandmother", "last week"])]),
        ("M", "I miss her every single day.", ["sad", "sad", "sad"], [("miss", ["I", "her", "every single day"])]),
        ("F", "Okay.", ["neu", "hap", "sad"], []),
        ("M", "Stop lying to me right now!", ["ang", "ang", "ang"], [("Stop", ["lying to me"]), ("lying", ["to me"])]),
    ],
    "Ses02_a": [
        ("F", "We won the lottery, can you believe it?", ["hap", "hap", "sur"], [("won", ["We", "the lottery"]), ("believe", ["you", "it"])]),
        ("M", "Please put the box on the table.", ["neu", "neu", "oth"], [("put", ["the box", "on the table"])]),
        ("F", "Nobody came to my birthday party.", ["sad", "sad", "fru"], [("came", ["Nobody", "to my birthday party"])]),
        ("M", "Get out of my house!", ["ang", "ang", "dis"], [("Get out", ["of my house"])]),
    ],
    "Ses02_b": [
        ("F", "How was the meeting?", ["neu", "oth", "fru"], [("was", ["the meeting"])]),
        ("M", "The meeting starts at ten.", ["neu", "neu", "hap"], [("starts", ["The meeting", "at ten"])]),
        ("F", "I hate waiting for you all the time!", ["ang", "ang", "neu"], [("hate", ["I", "waiting for you all the time"]), ("waiting", ["for you", "all the time"])]),
        ("M", "We are getting married in June!", ["hap", "hap", "neu"], [("getting married", ["We", "in June"])]),
    ],
    "Ses03_a": [
        ("F", "The dog died this morning.", ["sad", "sad", "sad"], [("died", ["The dog", "this morning"])]),
        ("M", "Hmm.", ["fru", "oth", "exc"], []),
        ("F", "Turn left at the corner.", ["neu", "neu", "sur"], [("Turn", ["left", "at the corner"])]),
    ],
}

FRIENDS = {
    "s01e01_c01": [
        ("Monica", "There's nothing to tell!", "neutral", [("tell", ["nothing"])]),
        ("Joey", "C'mon, you're going out with the guy!", "joy", [("going out", ["you're", "with the guy"])]),
        ("Chandler", "All right Joey, be nice.", "neutral", [("be", ["Joey", "nice"])]),
    ],
    "s01e01_c02": [
        ("Ross", "I just feel like someone reached down my throat.", "sadness", [("feel", ["I", "like someone reached down my throat"]), ("reached", ["someone", "down my throat"])]),
        ("Joey", "Strip joint! C'mon, you're single!", "joy", []),
    ],
    "s01e02_c01": [
        ("Rachel", "Oh my God, what are you doing here?", "surprise", [("doing", ["you", "here"])]),
        ("Monica", "Get away from my coffee!", "anger", [("Get away", ["from my coffee"])]),
        ("Phoebe", "Ew, that smells terrible.", "disgust", [("smells", ["that", "terrible"])]),
    ],
    "s01e02_c02": [
        ("Ross", "What if she hates me?", "fear", [("hates", ["she", "me"])]),
        ("Chandler", "Then she hates you.", "non-neutral", [("hates", ["she", "you"])]),
    ],
    "s01e03_c01": [
        ("Phoebe", "I wrote a new song about my cat.", "joy", [("wrote", ["I", "a new song about my cat"])]),
        ("Monica", "Is it the one about the smelly cat?", "neutral", [("Is", ["it", "the one about the smelly cat"])]),
    ],
    "s01e03_c02": [
        ("Joey", "Who ate my sandwich?", "anger", [("ate", ["Who", "my sandwich"])]),
        ("Ross", "Not me.", "neutral", []),
        ("Joey", "Someone ate my sandwich!", "anger", [("ate", ["Someone", "my sandwich"])]),
    ],
    "s01e04_c01": [
        ("Rachel", "I can't believe I did that.", "sadness", [("believe", ["I", "I did that"]), ("did", ["I", "that"])]),
        ("Monica", "It's okay, everyone makes mistakes.", "neutral", [("makes", ["everyone", "mistakes"])]),
    ],
    "s01e04_c02": [
        ("Chandler", "Could this BE any more awkward?", "surprise", [("BE", ["this", "any more awkward"])]),
        ("Ross", "A spider is on your shoulder.", "fear", [("is", ["A spider", "on your shoulder"])]),
    ],
}


def consensus(votes, labels):
    counts = Counter(votes).most_common()
    top, n = counts[0]
    if n < 2 or (len(counts) > 1 and counts[1][1] == n):
        return None
    return top if top in labels else None


def write_jsonl(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def write_json(path, value):
    with open(path, "w") as f:
        json.dump(value, f, indent=1, sort_keys=True)
        f.write("\n")


def main():
    os.makedirs(OUT, exist_ok=True)

    records, srl, targets = [], {}, Counter()
    for conv, utts in IEMOCAP.items():
        for i, (spk, text, votes, frames) in enumerate(utts):
            uid = f"u{i + 1}"
            records.append({"conv_id": conv, "utt_id": uid, "speaker": spk, "text": text, "votes": votes})
            srl[f"{conv}/{uid}"] = frames_for(text, frames)
            gold = consensus(votes, {"ang", "hap", "neu", "sad"})
            if gold:
                targets[gold] += 1
    assert targets == {"ang": 4, "hap": 4, "neu": 4, "sad": 4}, targets
    write_jsonl(os.path.join(OUT, "iemocap_mini.jsonl"), records)
    write_json(os.path.join(OUT, "iemocap_mini.srl.json"), srl)
    print(f"iemocap_mini: {len(IEMOCAP)} conversations, {len(records)} utterances, targets {dict(targets)}")

    # one span past the end of "Fine, whatever." (4 tokens)
    bad = dict(srl)
    bad["Ses01_a/u5"] = [{"predicate": [1, 2], "arguments": [[2, 6]]}]
    write_json(os.path.join(OUT, "iemocap_mini.bad_span.srl.json"), bad)

    records, srl, labels = [], {}, Counter()
    for conv, utts in FRIENDS.items():
        for i, (spk, text, gold, frames) in enumerate(utts):
            uid = f"u{i + 1}"
            records.append({"conv_id": conv, "utt_id": uid, "speaker": spk, "text": text, "gold": gold})
            if frames:
                srl[f"{conv}/{uid}"] = frames_for(text, frames)
            labels[gold] += 1
    write_jsonl(os.path.join(OUT, "friends_mini.jsonl"), records)
    write_json(os.path.join(OUT, "friends_mini.srl.json"), srl)
    print(f"friends_mini: {len(FRIENDS)} conversations, {len(records)} utterances, {len(srl)} with frames, labels {dict(labels)}")


if __name__ == "__main__":
    main()
