"""Generator for the bundled synthetic headline corpus.

The repo ships a desk-scale labeled corpus (binary + ordinal + a clean
held-out set) produced by this module with a fixed seed, so training and
acceptance runs are reproducible without redistributing any third-party
dataset. Headlines come from a small template grammar whose sentiment
lexicon is tiered: strong/mild negative, neutral, mild/strong positive.
The binary and ordinal sets share the same word banks so one vocabulary
covers all four cascade stages.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

DEFAULT_SEED = 7

SUBJECTS = [
    "local volunteers", "city council", "research team", "young athletes",
    "hospital staff", "community garden", "school choir", "rescue shelter",
    "small farmers", "neighborhood library", "wildlife rangers",
    "retired teachers", "university students", "harbor town", "mountain village",
]

POS_STRONG = ["heartwarming", "inspiring", "joyous", "triumphant", "wonderful", "uplifting"]
POS_MILD = ["promising", "hopeful", "encouraging", "cheerful", "bright"]
POS_VERBS = ["celebrate", "rescue", "restore", "revive", "reunite"]
POS_NOUNS = ["recovery", "comeback", "breakthrough", "reunion", "milestone",
             "harvest festival", "donation drive", "friendship"]

NEG_STRONG = ["devastating", "tragic", "horrific", "catastrophic", "deadly"]
NEG_MILD = ["worrying", "grim", "troubling", "bleak", "disappointing"]
NEG_VERBS = ["mourn", "suffer", "dread", "lament", "endure"]
NEG_NOUNS = ["disaster", "outbreak", "crisis", "wildfire", "collapse",
             "layoffs", "drought", "fraud scandal"]

NEUTRAL_VERBS = ["announce", "report", "schedule", "review", "discuss"]
NEUTRAL_NOUNS = ["meeting", "budget", "survey", "roadworks", "forecast", "timetable"]


def _pick(rng: np.random.Generator, options: list[str]) -> str:
    return options[rng.integers(len(options))]


def _positive_headline(rng: np.random.Generator, strong: bool) -> str:
    adj = _pick(rng, POS_STRONG if strong else POS_MILD)
    subj = _pick(rng, SUBJECTS)
    verb = _pick(rng, POS_VERBS)
    noun = _pick(rng, POS_NOUNS)
    forms = [
        f"{subj} {verb} {adj} {noun}",
        f"{adj} {noun} as {subj} {verb} again",
        f"{subj} hail {adj} {noun}",
    ]
    return forms[rng.integers(len(forms))]


def _negative_headline(rng: np.random.Generator, strong: bool) -> str:
    adj = _pick(rng, NEG_STRONG if strong else NEG_MILD)
    subj = _pick(rng, SUBJECTS)
    verb = _pick(rng, NEG_VERBS)
    noun = _pick(rng, NEG_NOUNS)
    forms = [
        f"{subj} {verb} {adj} {noun}",
        f"{adj} {noun} leaves {subj} reeling",
        f"{subj} brace for {adj} {noun}",
    ]
    return forms[rng.integers(len(forms))]


def _neutral_headline(rng: np.random.Generator) -> str:
    return (f"{_pick(rng, SUBJECTS)} {_pick(rng, NEUTRAL_VERBS)} "
            f"{_pick(rng, NEUTRAL_NOUNS)}")


def _date_for(rng: np.random.Generator, index: int) -> str:
    month = index % 12 + 1
    day = int(rng.integers(1, 28))
    return f"2020-{month:02d}-{day:02d}"


def generate_binary(n: int, seed: int) -> list[tuple[str, float, str]]:
    """Rows of (text, score in [-1,1], ISO date) for the headlines_csv
    format. Scores carry the lexicon tier: strong words sit in the outer
    magnitude band. A small ambiguous slice keeps the task non-trivial."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        roll = rng.random()
        strong = bool(rng.random() < 0.5)
        magnitude = rng.uniform(0.6, 1.0) if strong else rng.uniform(0.2, 0.6)
        if roll < 0.485:
            rows.append((_positive_headline(rng, strong), round(magnitude, 3),
                         _date_for(rng, i)))
        elif roll < 0.97:
            rows.append((_negative_headline(rng, strong), round(-magnitude, 3),
                         _date_for(rng, i)))
        else:
            # Ambiguous filler: neutral wording, weak score of random sign.
            sign = 1.0 if rng.random() < 0.5 else -1.0
            rows.append((_neutral_headline(rng), round(sign * rng.uniform(0.05, 0.2), 3),
                         _date_for(rng, i)))
    return rows


def generate_ordinal(n: int, seed: int) -> list[tuple[int, str]]:
    """Rows of (rating 1..5, text) for the ratings_csv format; each rating
    maps to one lexicon tier."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        rating = i % 5 + 1
        if rating == 1:
            text = _negative_headline(rng, strong=True)
        elif rating == 2:
            text = _negative_headline(rng, strong=False)
        elif rating == 3:
            text = _neutral_headline(rng)
        elif rating == 4:
            text = _positive_headline(rng, strong=False)
        else:
            text = _positive_headline(rng, strong=True)
        rows.append((rating, text))
    return rows


def generate_holdout(n_pos: int, n_neg: int, seed: int) -> list[tuple[str, float, str]]:
    """Cleanly polarized held-out set: every row uses the strong lexicon
    tier of its class, which is what the zero-leak check needs."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_pos):
        rows.append((_positive_headline(rng, strong=True),
                     round(rng.uniform(0.7, 1.0), 3), _date_for(rng, i)))
    for i in range(n_neg):
        rows.append((_negative_headline(rng, strong=True),
                     round(-rng.uniform(0.7, 1.0), 3), _date_for(rng, i)))
    return rows


def write_bundled_corpus(out_dir: str | Path, seed: int = DEFAULT_SEED) -> dict:
    """Write the three bundled CSVs; returns the row counts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    binary = generate_binary(2000, seed)
    with open(out / "binary_train.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "score", "date"])
        writer.writerows(binary)

    ordinal = generate_ordinal(1000, seed + 1)
    with open(out / "ordinal_train.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rating", "text"])
        writer.writerows(ordinal)

    holdout = generate_holdout(100, 100, seed + 2)
    with open(out / "holdout_200.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "score", "date"])
        writer.writerows(holdout)

    return {"binary_train": len(binary), "ordinal_train": len(ordinal),
            "holdout": len(holdout), "seed": seed}
