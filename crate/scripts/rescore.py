#!/usr/bin/env python3
"""Scores (gold, pred) pairs without touching the Rust code.

    rescore.py dump PREDICTIONS.jsonl LABEL [LABEL ...]
        metrics of a prediction dump, as JSON on stdout

    rescore.py synthetic OUT.json
        1,000 seeded random pairs over the friends8 labels plus their
        metrics, for the metric golden test

WA is correct / total. UA is the mean recall over labels that occur as
gold, summed in label order. The confusion matrix is indexed [gold][pred].
"""

import json
import random
import sys

FRIENDS8 = ["non-neutral", "neutral", "joy", "sadness", "anger", "disgust", "fear", "surprise"]


def score(pairs, labels):
    index = {l: i for i, l in enumerate(labels)}
    conf = [[0] * len(labels) for _ in labels]
    for g, p in pairs:
        conf[index[g]][index[p]] += 1
    total = sum(map(sum, conf))
    correct = sum(conf[i][i] for i in range(len(labels)))
    per_label = {}
    recall_sum, present = 0.0, 0
    for i, l in enumerate(labels):
        n = sum(conf[i])
        if n:
            per_label[l] = conf[i][i] / n
            recall_sum += per_label[l]
            present += 1
        else:
            per_label[l] = None
    return {
        "weighted_accuracy": correct / total,
        "unweighted_accuracy": recall_sum / present,
        "per_label_accuracy": per_label,
        "confusion": conf,
        "total": total,
        "correct": correct,
    }


def main(argv):
    if len(argv) >= 3 and argv[0] == "dump":
        with open(argv[1]) as f:
            rows = [json.loads(l) for l in f if l.strip()]
        print(json.dumps(score([(r["gold"], r["pred"]) for r in rows], argv[2:]), indent=1))
    elif len(argv) == 2 and argv[0] == "synthetic":
        rng = random.Random(20240611)
        # "disgust" never occurs as gold, so UA averages over seven labels
        gold_labels = [l for l in FRIENDS8 if l != "disgust"]
        pairs = []
        for _ in range(1000):
            g = rng.choice(gold_labels)
            p = g if rng.random() < 0.45 else rng.choice(FRIENDS8)
            pairs.append([g, p])
        with open(argv[1], "w") as f:
            json.dump({"labels": FRIENDS8, "pairs": pairs, "metrics": score(pairs, FRIENDS8)}, f)
            f.write("\n")
    else:
        sys.exit(__doc__)


if __name__ == "__main__":
    main(sys.argv[1:])
