"""Articles, labeled examples, dataset adapters, and deterministic splits."""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import Optional
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

import numpy as np

from .errors import FormatError, InvalidRatio, InvalidScore, IoError

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_WS = re.compile(r"\s+")


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash, the stable content key used for ids and dedup."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def normalize_title(title: str) -> str:
    """Collapse runs of whitespace and trim."""
    return _WS.sub(" ", title).strip()


def canonicalize_url(url: str) -> str:
    """Lowercase the host, drop the fragment and utm_* tracking params."""
    parts = urlsplit(url)
    query = [(k, v) for k, v in parse_qsl(parts.query, keep_blank_values=True)
             if not k.lower().startswith("utm_")]
    return urlunsplit((
        parts.scheme.lower(),
        parts.netloc.lower(),
        parts.path,
        urlencode(query),
        "",
    ))


def article_id(title: str, url: str) -> str:
    """Content-derived id: FNV-1a over normalized title + canonical url."""
    key = normalize_title(title) + "\x1f" + canonicalize_url(url)
    return format(fnv1a64(key.encode("utf-8")), "016x")


@dataclass(frozen=True)
class Article:
    """One normalized news item flowing through the cascade."""

    id: str
    title: str
    source_name: str
    url: str
    published_at: datetime
    fetched_at: datetime
    body: Optional[str] = None

    def __post_init__(self):
        if not normalize_title(self.title):
            raise ValueError("article title empty after normalization")
        if self.published_at > self.fetched_at:
            raise ValueError("published_at after fetched_at")

    @classmethod
    def create(cls, title: str, url: str, source_name: str,
               published_at: Optional[datetime], fetched_at: datetime,
               body: Optional[str] = None) -> "Article":
        """Build an article with a derived id; missing or future publish
        dates are clamped to the fetch time."""
        title = normalize_title(title)
        url = canonicalize_url(url)
        if published_at is None or published_at > fetched_at:
            published_at = fetched_at
        return cls(
            id=article_id(title, url),
            title=title,
            source_name=source_name,
            url=url,
            published_at=published_at,
            fetched_at=fetched_at,
            body=body,
        )

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "title": self.title,
            "source": self.source_name,
            "url": self.url,
            "published_at": self.published_at.astimezone(timezone.utc).isoformat(),
            "fetched_at": self.fetched_at.astimezone(timezone.utc).isoformat(),
        }
        if self.body is not None:
            d["body"] = self.body
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Article":
        return cls(
            id=d["id"],
            title=d["title"],
            source_name=d["source"],
            url=d["url"],
            published_at=datetime.fromisoformat(d["published_at"]),
            fetched_at=datetime.fromisoformat(d["fetched_at"]),
            body=d.get("body"),
        )


@dataclass(frozen=True)
class LabeledExample:
    """Text plus a binary (0/1) or ordinal (1..5) sentiment label."""

    text: str
    label: int
    origin: str = "dataset"  # "dataset" | "curator"
    date: Optional[date] = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("example text empty")
        if self.label not in (0, 1, 2, 3, 4, 5):
            raise ValueError(f"label out of range: {self.label}")
        if self.origin not in ("dataset", "curator"):
            raise ValueError(f"unknown origin: {self.origin}")


@dataclass
class LoadResult:
    """Examples plus tallies for rows that produced none.

    `skipped` counts malformed rows; `dropped` counts valid rows whose
    score was exactly 0 and therefore has no binary label.
    """

    examples: list[LabeledExample] = field(default_factory=list)
    skipped: int = 0
    dropped: int = 0


@dataclass
class DatasetSplit:
    train: list[LabeledExample]
    test: list[LabeledExample]
    seed: int
    ratio: float


def binarize_label(score: float) -> Optional[int]:
    """Map a [-1,1] sentiment score to a binary label.

    Positive scores become 1, negative 0. A score of exactly 0 is
    unassigned by the rule pair and returns None: the example is dropped
    rather than given an arbitrary class.
    """
    if not math.isfinite(score):
        raise InvalidScore(f"score not finite: {score!r}")
    if score > 0:
        return 1
    if score < 0:
        return 0
    return None


def _parse_date(raw: str) -> Optional[date]:
    raw = raw.strip()
    if not raw:
        return None
    return date.fromisoformat(raw)


def _require_columns(fieldnames, required: tuple[str, ...], path: str):
    have = set(fieldnames or ())
    missing = [c for c in required if c not in have]
    if missing:
        raise FormatError(f"{path}: missing required column(s): {', '.join(missing)}")


def _load_headlines_csv(path: str) -> LoadResult:
    result = LoadResult()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, ("text", "score", "date"), path)
        for row in reader:
            try:
                text = (row["text"] or "").strip()
                score = float(row["score"])
                if not text or not -1.0 <= score <= 1.0:
                    result.skipped += 1
                    continue
                label = binarize_label(score)
                if label is None:
                    result.dropped += 1
                    continue
                result.examples.append(
                    LabeledExample(text=text, label=label, date=_parse_date(row["date"] or "")))
            except (TypeError, ValueError, InvalidScore):
                result.skipped += 1
    return result


def _load_tweets_csv(path: str) -> LoadResult:
    # Raw labels follow the 0=negative / 4=positive convention of the
    # large public tweet corpora; anything else is a malformed row.
    result = LoadResult()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, ("label", "text"), path)
        for row in reader:
            try:
                raw = int(row["label"])
                text = (row["text"] or "").strip()
                if not text or raw not in (0, 4):
                    result.skipped += 1
                    continue
                result.examples.append(LabeledExample(text=text, label=1 if raw == 4 else 0))
            except (TypeError, ValueError):
                result.skipped += 1
    return result


def _load_ratings_csv(path: str) -> LoadResult:
    result = LoadResult()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, ("rating", "text"), path)
        for row in reader:
            try:
                rating = int(row["rating"])
                text = (row["text"] or "").strip()
                if not text or not 1 <= rating <= 5:
                    result.skipped += 1
                    continue
                result.examples.append(LabeledExample(text=text, label=rating))
            except (TypeError, ValueError):
                result.skipped += 1
    return result


def _load_jsonl(path: str) -> LoadResult:
    result = LoadResult()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                d = _parse_date(obj["date"]) if obj.get("date") else None
                result.examples.append(LabeledExample(
                    text=obj["text"],
                    label=int(obj["label"]),
                    origin=obj.get("origin", "dataset"),
                    date=d,
                ))
            except (KeyError, TypeError, ValueError):
                result.skipped += 1
    return result


_LOADERS = {
    "headlines_csv": _load_headlines_csv,
    "tweets_csv": _load_tweets_csv,
    "ratings_csv": _load_ratings_csv,
    "jsonl": _load_jsonl,
}

FORMATS = tuple(_LOADERS)


def load_dataset(path: str, format: str) -> LoadResult:
    """Load labeled examples from `path` under the declared format.

    Malformed rows are tallied, not fatal; a missing required column is.
    """
    if format not in _LOADERS:
        raise FormatError(f"unknown dataset format: {format}")
    try:
        return _LOADERS[format](path)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def split_dataset(examples: list[LabeledExample], seed: int, ratio: float) -> DatasetSplit:
    """Deterministic seeded shuffle; the first floor(ratio*N) go to train."""
    if not 0 < ratio < 1:
        raise InvalidRatio(f"ratio must lie in (0,1): {ratio}")
    if len(examples) < 2:
        raise InvalidRatio("need at least 2 examples to split")
    order = np.random.default_rng(seed).permutation(len(examples))
    cut = int(ratio * len(examples))
    train = [examples[i] for i in order[:cut]]
    test = [examples[i] for i in order[cut:]]
    return DatasetSplit(train=train, test=test, seed=seed, ratio=ratio)
