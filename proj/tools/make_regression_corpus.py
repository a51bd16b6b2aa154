#!/usr/bin/env python3
"""Writes the synthetic code-mixed regression corpus under data/regression.

Each tweet carries sentiment cue words of exactly one class, mixed with
neutral Spanish/English filler and social-media noise (elongations, emoji,
hashtags, mentions, URLs, contractions, slang). The label is recoverable
after normalization, so every model should learn it.
"""

import argparse
import pathlib
import random

CUES = {
    "positive": ["love", "happy", "great", "amazing", "feliz", "bueno", "chido", "genial", "best", "awesome"],
    "negative": ["hate", "sad", "awful", "terrible", "triste", "malo", "horrible", "worst", "angry", "enojado"],
    "neutral": ["meeting", "tomorrow", "schedule", "bus", "manana", "horario", "weather", "report", "class", "tarea"],
}
EMOJI = {"positive": ["😂", "😊", "❤️", "🔥"], "negative": ["😢", "😡", "💔"], "neutral": ["📅", "🚌"]}
FILLER = ["el", "la", "que", "con", "the", "and", "my", "today", "hoy", "pero", "porque", "this", "is", "so",
          "muy", "con", "para", "we", "they", "esta"]
SLANG = ["u", "abt", "2day", "4ever", "thx", "pls", "b4"]
CONTRACTIONS = ["can't", "don't", "i'm", "it's", "won't", "i've"]


def elongate(word, rng):
    # Stretch a vowel or the final letter, as people do.
    spots = [i for i, ch in enumerate(word) if ch in "aeiou"] + [len(word) - 1]
    i = rng.choice(spots)
    return word[: i + 1] + word[i] * rng.randint(2, 5) + word[i + 1 :]


def tweet(label, rng):
    words = [rng.choice(FILLER) for _ in range(rng.randint(3, 9))]
    for _ in range(rng.randint(1, 2)):
        cue = rng.choice(CUES[label])
        if rng.random() < 0.3:
            cue = elongate(cue, rng)
        if rng.random() < 0.2:
            cue = "#" + cue
        if rng.random() < 0.3:
            cue = cue.upper()
        words.insert(rng.randrange(len(words) + 1), cue)
    if rng.random() < 0.3:
        words.insert(rng.randrange(len(words) + 1), rng.choice(SLANG))
    if rng.random() < 0.3:
        words.insert(rng.randrange(len(words) + 1), rng.choice(CONTRACTIONS))
    if rng.random() < 0.25:
        words.insert(0, "@user%d" % rng.randint(1, 99))
    if rng.random() < 0.15:
        words.append("https://t.co/%x" % rng.getrandbits(24))
    text = " ".join(words)
    if rng.random() < 0.4:
        text += rng.choice(["!", "!!!", "...", "?"])
    if rng.random() < 0.4:
        text += " " + rng.choice(EMOJI[label])
    return text


def write(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write("\t".join(row) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "regression"))
    ap.add_argument("--seed", type=int, default=2020)
    ap.add_argument("--train", type=int, default=450)
    ap.add_argument("--val", type=int, default=150)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    labels = list(CUES)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, n, prefix in (("train.tsv", args.train, "t"), ("val.tsv", args.val, "v")):
        write(out / name, [("%s%04d" % (prefix, i), labels[i % 3], tweet(labels[i % 3], rng)) for i in range(n)])


if __name__ == "__main__":
    main()
