#!/usr/bin/env python3
"""Regenerates tests/data/synthetic*.jsonl.

Two language pairs, four systems each, 50 segments per system. System k
replaces a growing share of reference tokens with out-of-vocabulary words,
and its human score is the share of tokens left intact.
"""

import argparse
import json
import pathlib
import random

WORDS = (
    "the a new old city river house market council minister report week year "
    "people government plan school road water price company team game music "
    "said will would could announced opened closed reported found made took "
    "after before during under over with from into about between against "
    "small large early late local national public private first last other"
).split()

LANG_PAIRS = ("de-en", "ru-en")
SYSTEMS = (("sys-a", 0.0), ("sys-b", 0.2), ("sys-c", 0.4), ("sys-d", 0.6))
SEGMENTS = 50


def reference(rng):
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(6, 14)))


def corrupt(rng, text, share):
    tokens = text.split()
    k = round(share * len(tokens))
    for i in rng.sample(range(len(tokens)), k):
        tokens[i] = "zz%04d" % rng.randint(0, 9999)
    return " ".join(tokens)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=pathlib.Path(__file__).parent.parent / "tests" / "data")
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    rng = random.Random(20191103)

    records, human = [], []
    for lp in LANG_PAIRS:
        refs = [reference(rng) for _ in range(SEGMENTS)]
        for name, share in SYSTEMS:
            for i, ref in enumerate(refs, start=1):
                records.append({
                    "system": name,
                    "lang_pair": lp,
                    "segment_id": "seg-%d" % i,
                    "candidate": corrupt(rng, ref, share),
                    "references": [ref],
                })
            human.append({"system": name, "lang_pair": lp, "human_score": round(1.0 - share, 3)})

    with open(out / "synthetic.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")
    with open(out / "synthetic_human.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for h in human:
            f.write(json.dumps(h, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
