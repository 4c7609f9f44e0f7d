"""File-backed persistence: append-only article/verdict log, dated feeds,
curation queue, curated labeled examples, model artifacts, and the dedup
window.

Writes follow the temp-file-plus-rename discipline, so any file a reader
sees is either absent or complete. The article log is line-framed JSONL;
a partial trailing line left by a crash is skipped and reported. One
writer at a time mutates a store; readers need no locks.

Layout under the store root:
    data/articles.jsonl      append-only article + verdict log
    data/feeds/<date>.json   published daily feeds (one per date)
    data/queue.jsonl         current curation queue, oldest first
    data/curated.jsonl       curator-labeled examples, one per article
    data/adjudications.jsonl append-only curator audit log
    data/runs/<date>.json    per-run cascade stats
    data/dedup.json          dedup window keys
    models/<id>.json         model artifacts
    models/vocab-<id>.json   vocabulary artifacts
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import date as date_type
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .artifacts import ModelArtifact
from .corpus import Article, fnv1a64
from .errors import AlreadyPublished, CorruptArtifact, IoError, NotFound
from .features import Vocabulary

VERDICT_LABELS = ("positive", "negative", "skip")


def atomic_write(path: Path, data: bytes):
    """Write via temp file + rename so the target is never half-written."""
    tmp = path.with_name(f".{path.name}.tmp.{os.getpid()}")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_jsonl(path: Path) -> tuple[list[dict], int]:
    """Parse a line-framed log. A partial trailing line (crash artifact)
    is skipped and counted; corruption elsewhere raises."""
    if not path.exists():
        return [], 0
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    rows = []
    partial = 0
    lines = raw.split(b"\n")
    has_final_newline = raw.endswith(b"\n")
    body, tail = lines[:-1], lines[-1]
    for k, line in enumerate(body):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise IoError(f"{path}:{k + 1}: corrupt record: {exc}") from exc
    if tail.strip():
        # No trailing newline: the writer died mid-line.
        if has_final_newline:
            raise IoError(f"{path}: trailing garbage")
        try:
            rows.append(json.loads(tail))
        except json.JSONDecodeError:
            partial = 1
    return rows, partial


@dataclass
class FeedRecord:
    """One published daily feed: article ids ranked by mean stage score."""

    date: date_type
    articles: list[dict]  # {"id": ..., "mean_score": ...}, score descending
    published: bool = True

    def to_bytes(self) -> bytes:
        payload = {
            "date": self.date.isoformat(),
            "articles": self.articles,
            "published": self.published,
        }
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")

    @classmethod
    def from_dict(cls, obj: dict) -> "FeedRecord":
        return cls(date=date_type.fromisoformat(obj["date"]),
                   articles=obj["articles"],
                   published=obj.get("published", True))


class Store:
    """Single-writer, multi-reader persistence rooted at one directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.data_dir = self.root / "data"
        self.feeds_dir = self.data_dir / "feeds"
        self.runs_dir = self.data_dir / "runs"
        self.models_dir = self.root / "models"
        for d in (self.data_dir, self.feeds_dir, self.runs_dir, self.models_dir):
            d.mkdir(parents=True, exist_ok=True)
        self.articles_path = self.data_dir / "articles.jsonl"
        self.queue_path = self.data_dir / "queue.jsonl"
        self.curated_path = self.data_dir / "curated.jsonl"
        self.adjudications_path = self.data_dir / "adjudications.jsonl"
        self.dedup_path = self.data_dir / "dedup.json"
        self._lock = threading.Lock()

    # -- line-framed logs -------------------------------------------------

    def _append_jsonl(self, path: Path, rows: list[dict]):
        if not rows:
            return
        data = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
        try:
            with open(path, "ab") as fh:
                fh.write(data.encode("utf-8"))
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise IoError(f"cannot append to {path}: {exc}") from exc

    def _rewrite_jsonl(self, path: Path, rows: list[dict]):
        data = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
        atomic_write(path, data.encode("utf-8"))

    # -- articles ----------------------------------------------------------

    def append_articles(self, articles: list[Article], verdicts: list[dict]):
        """Append one record per article with its verdict trail embedded."""
        rows = []
        for article, verdict in zip(articles, verdicts):
            row = article.to_dict()
            row["verdict"] = verdict
            rows.append(row)
        with self._lock:
            self._append_jsonl(self.articles_path, rows)

    def read_articles(self) -> tuple[dict[str, dict], int]:
        """Article records keyed by id, plus the partial-line tally."""
        rows, partial = read_jsonl(self.articles_path)
        return {row["id"]: row for row in rows}, partial

    # -- feeds ---------------------------------------------------------------

    def feed_path(self, date: date_type) -> Path:
        return self.feeds_dir / f"{date.isoformat()}.json"

    def publish_feed(self, record: FeedRecord):
        """Atomic publish; at most one feed per date, ever."""
        path = self.feed_path(record.date)
        with self._lock:
            if path.exists():
                raise AlreadyPublished(f"feed for {record.date.isoformat()} already published")
            atomic_write(path, record.to_bytes())

    def load_feed(self, date: date_type) -> Optional[FeedRecord]:
        path = self.feed_path(date)
        if not path.exists():
            return None
        try:
            return FeedRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise IoError(f"cannot load feed {path}: {exc}") from exc

    def latest_feed_date(self) -> Optional[date_type]:
        dates = []
        for path in self.feeds_dir.glob("*.json"):
            try:
                dates.append(date_type.fromisoformat(path.stem))
            except ValueError:
                continue
        return max(dates) if dates else None

    # -- curation queue ------------------------------------------------------

    def enqueue(self, entries: list[dict]):
        """Add borderline articles to the queue (oldest stay first)."""
        with self._lock:
            self._append_jsonl(self.queue_path, entries)

    def read_queue(self) -> list[dict]:
        rows, _ = read_jsonl(self.queue_path)
        return rows

    def read_curated(self) -> list[dict]:
        rows, _ = read_jsonl(self.curated_path)
        return rows

    def read_adjudications(self) -> list[dict]:
        rows, _ = read_jsonl(self.adjudications_path)
        return rows

    def _find_title(self, article_id: str, queue_entry: Optional[dict]) -> Optional[str]:
        if queue_entry is not None:
            return queue_entry.get("title")
        articles, _ = self.read_articles()
        if article_id in articles:
            return articles[article_id]["title"]
        return None

    def record_curator_verdict(self, article_id: str, label: str,
                               curator_id: str = "anonymous") -> int:
        """Apply an adjudication. Positive/negative verdicts upsert one
        curator-labeled example; skip removes any. Repeated verdicts
        overwrite (last verdict wins). Returns the new queue size."""
        if label not in VERDICT_LABELS:
            raise ValueError(f"invalid verdict label: {label!r}")
        with self._lock:
            queue = self.read_queue()
            entry = next((q for q in queue if q["article_id"] == article_id), None)
            known = entry is not None
            if not known:
                known = any(a["article_id"] == article_id for a in self.read_adjudications())
            if not known:
                articles, _ = self.read_articles()
                known = article_id in articles
            if not known:
                raise NotFound(f"unknown article: {article_id}")

            title = self._find_title(article_id, entry)
            now = datetime.now(timezone.utc).isoformat()
            self._append_jsonl(self.adjudications_path, [{
                "article_id": article_id,
                "label": label,
                "curator_id": curator_id,
                "at": now,
            }])

            curated = {row["article_id"]: row for row in self.read_curated()}
            if label == "skip":
                curated.pop(article_id, None)
            else:
                curated[article_id] = {
                    "article_id": article_id,
                    "text": title or article_id,
                    "label": 1 if label == "positive" else 0,
                    "origin": "curator",
                    "date": now[:10],
                }
            self._rewrite_jsonl(self.curated_path, list(curated.values()))

            if entry is not None:
                queue = [q for q in queue if q["article_id"] != article_id]
                self._rewrite_jsonl(self.queue_path, queue)
            return len(queue)

    # -- model + vocabulary artifacts -----------------------------------------

    def save_model(self, artifact: ModelArtifact) -> str:
        raw = artifact.to_json().encode("utf-8")
        model_id = format(fnv1a64(raw), "016x")
        atomic_write(self.models_dir / f"{model_id}.json", raw)
        return model_id

    def load_model(self, ref: str) -> ModelArtifact:
        """Resolve an artifact id in the model dir, or a filesystem path."""
        path = self.models_dir / f"{ref}.json"
        if not path.exists():
            path = Path(ref)
        if not path.exists():
            raise NotFound(f"model artifact not found: {ref}")
        artifact = ModelArtifact.from_json(path.read_text(encoding="utf-8"))
        artifact.source_path = path
        return artifact

    def save_vocab(self, vocab: Vocabulary) -> str:
        raw = vocab.to_json().encode("utf-8")
        vocab_id = format(fnv1a64(raw), "016x")
        atomic_write(self.models_dir / f"vocab-{vocab_id}.json", raw)
        return vocab_id

    def load_vocab(self, ref: str, relative_to: Optional[Path] = None) -> Vocabulary:
        """Resolve a vocabulary by store id, by path, or relative to the
        artifact file that referenced it."""
        candidates = [self.models_dir / f"vocab-{ref}.json", Path(ref)]
        if relative_to is not None:
            candidates.append(relative_to / ref)
        path = next((p for p in candidates if p.exists()), None)
        if path is None:
            raise NotFound(f"vocabulary artifact not found: {ref}")
        try:
            return Vocabulary.from_json(path.read_text(encoding="utf-8"))
        except (ValueError, KeyError) as exc:
            raise CorruptArtifact(f"bad vocabulary {ref}: {exc}") from exc

    # -- run stats + dedup window ----------------------------------------------

    def save_run(self, date: date_type, payload: dict):
        raw = (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
        atomic_write(self.runs_dir / f"{date.isoformat()}.json", raw)

    def load_run(self, date: date_type) -> Optional[dict]:
        path = self.runs_dir / f"{date.isoformat()}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def load_dedup_window(self) -> dict[str, str]:
        if not self.dedup_path.exists():
            return {}
        return json.loads(self.dedup_path.read_text(encoding="utf-8"))

    def save_dedup_window(self, window: dict[str, str]):
        raw = (json.dumps(window, sort_keys=True) + "\n").encode("utf-8")
        atomic_write(self.dedup_path, raw)
