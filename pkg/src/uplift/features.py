"""Tokenization, vocabulary, TF-IDF vectors, and padded token sequences.

Two encodings feed the cascade: L2-normalized sparse TF-IDF vectors with
an appended always-1 bias slot (feed-forward net, SVM, strict gate), and
fixed-length zero-pre-padded index sequences (LSTM). Index 0 is padding,
index 1 is out-of-vocabulary; real tokens start at 2.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

PAD_INDEX = 0
OOV_INDEX = 1
DEFAULT_VOCAB_SIZE = 20_000
DEFAULT_SEQUENCE_LENGTH = 30

# A token is letters/digits, optionally joined by intra-word apostrophes.
_TOKEN = re.compile(r"[^\W_]+(?:'[^\W_]+)*", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that isn't a letter, digit, or
    intra-word apostrophe."""
    return _TOKEN.findall(text.lower())


@dataclass
class Vocabulary:
    """Token-to-index map with per-token document frequencies.

    Indices 0 (padding) and 1 (OOV) are reserved and never assigned.
    """

    token_to_index: dict[str, int] = field(default_factory=dict)
    df: dict[str, int] = field(default_factory=dict)
    n_docs: int = 0
    max_size: int = DEFAULT_VOCAB_SIZE

    def __len__(self) -> int:
        return len(self.token_to_index)

    @property
    def dimension(self) -> int:
        """Feature-vector width: one slot per token plus the bias slot."""
        return len(self.token_to_index) + 1

    @property
    def sequence_vocab_size(self) -> int:
        """Index space for sequences: tokens plus the two reserved slots."""
        return len(self.token_to_index) + 2

    def idf(self, token: str) -> float:
        # Smoothed so ubiquitous tokens keep nonzero weight and unseen
        # document counts cannot divide by zero.
        return math.log((1 + self.n_docs) / (1 + self.df[token])) + 1.0

    def to_json(self) -> str:
        tokens = sorted(self.token_to_index.items(), key=lambda kv: kv[1])
        return json.dumps({
            "version": 1,
            "n_docs": self.n_docs,
            "tokens": [{"t": t, "i": i, "df": self.df[t]} for t, i in tokens],
        })

    @classmethod
    def from_json(cls, raw: str) -> "Vocabulary":
        obj = json.loads(raw)
        if obj.get("version") != 1:
            raise ValueError(f"unsupported vocabulary version: {obj.get('version')}")
        vocab = cls(n_docs=obj["n_docs"])
        for entry in obj["tokens"]:
            vocab.token_to_index[entry["t"]] = entry["i"]
            vocab.df[entry["t"]] = entry["df"]
        return vocab


def build_vocabulary(docs: list[list[str]], max_size: int = DEFAULT_VOCAB_SIZE) -> Vocabulary:
    """Keep the top `max_size` tokens by document frequency.

    Ties break lexicographically ascending; indices are assigned in
    (frequency desc, token asc) order starting at 2, so builds are
    reproducible.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(set(doc))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    vocab = Vocabulary(n_docs=len(docs), max_size=max_size)
    for offset, (token, df) in enumerate(ranked):
        vocab.token_to_index[token] = 2 + offset
        vocab.df[token] = df
    return vocab


@dataclass
class FeatureVector:
    """Sparse vector with strictly increasing indices; the last slot
    (index dimension-1) is the always-1 bias."""

    indices: np.ndarray
    values: np.ndarray
    dimension: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension)
        dense[self.indices] = self.values
        return dense


def feature_vector(entries: list[tuple[int, float]], dimension: int) -> FeatureVector:
    """Build a FeatureVector from (index, weight) pairs plus the bias slot."""
    pairs = sorted(entries) + [(dimension - 1, 1.0)]
    idx = np.array([i for i, _ in pairs], dtype=np.int64)
    val = np.array([v for _, v in pairs], dtype=np.float64)
    return FeatureVector(indices=idx, values=val, dimension=dimension)


def vectorize_tfidf(tokens: list[str], vocab: Vocabulary) -> FeatureVector:
    """tf * idf per in-vocabulary token, L2-normalized over the non-bias
    entries; OOV tokens are ignored. All-OOV or empty input yields the
    bare bias vector."""
    tf = Counter(t for t in tokens if t in vocab.token_to_index)
    entries = []
    for token, count in tf.items():
        # Slot 0..len(vocab)-1 for tokens; sequence indices start at 2.
        entries.append((vocab.token_to_index[token] - 2, count * vocab.idf(token)))
    norm = math.sqrt(sum(w * w for _, w in entries))
    if norm > 0:
        entries = [(i, w / norm) for i, w in entries]
    return feature_vector(entries, vocab.dimension)


@dataclass
class TokenSequence:
    """Fixed-length, zero-pre-padded array of token indices."""

    indices: np.ndarray
    length_unpadded: int

    def __len__(self) -> int:
        return len(self.indices)


def encode_sequence(tokens: list[str], vocab: Vocabulary,
                    length: int = DEFAULT_SEQUENCE_LENGTH) -> TokenSequence:
    """Map tokens to indices (OOV -> 1), keep the last `length` tokens,
    pre-pad with zeros. Pre-padding keeps the real tokens adjacent to the
    final hidden state the classifier reads."""
    if length < 1:
        raise ValueError("sequence length must be >= 1")
    ids = [vocab.token_to_index.get(t, OOV_INDEX) for t in tokens][-length:]
    padded = np.zeros(length, dtype=np.int64)
    if ids:
        padded[-len(ids):] = ids
    return TokenSequence(indices=padded, length_unpadded=len(ids))
