"""Networking front end: fetch headlines from RSS/Atom/JSON sources,
normalize, deduplicate against a 14-day window, and run the daily batch
through the cascade.

Source failures are isolated: one bad feed never suppresses the others.
The dated feed publish is the commit point of a daily run; if anything
before it fails, no feed appears for the date.
"""

from __future__ import annotations

import json
import threading
import time
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date as date_type
from datetime import datetime, timedelta, timezone
from email.utils import parsedate_to_datetime
from typing import Callable, Optional
from urllib.parse import urlsplit

import httpx

from .corpus import Article, canonicalize_url, fnv1a64, normalize_title
from .errors import AlreadyPublished, ConfigError, IoError, SourceError
from .features import tokenize
from .pipeline import CascadeConfig, CascadeModels, cascade_stats, run_cascade
from .store import FeedRecord, Store

DEDUP_HORIZON_DAYS = 14
MAX_CONCURRENT_FETCHES = 8


@dataclass
class SourceConfig:
    name: str
    kind: str  # rss | atom | json_api
    url: str
    poll_interval: float = 86_400.0
    per_host_rate_limit: float = 1.0  # requests per second
    timeout: float = 10.0
    retries: int = 2

    def __post_init__(self):
        if self.kind not in ("rss", "atom", "json_api"):
            raise ConfigError(f"unknown source kind: {self.kind}")
        parts = urlsplit(self.url)
        if not parts.scheme or not parts.netloc:
            raise ConfigError(f"invalid source url: {self.url}")
        if self.retries < 0:
            raise ConfigError("retries must be >= 0")


def load_sources(path: str) -> list[SourceConfig]:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read sources file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sources file is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ConfigError("sources file must hold a JSON list")
    return [SourceConfig(
        name=s["name"],
        kind=s["kind"],
        url=s["url"],
        poll_interval=float(s.get("poll_interval", 86_400.0)),
        per_host_rate_limit=float(s.get("per_host_rate_limit", 1.0)),
        timeout=float(s.get("timeout", 10.0)),
        retries=int(s.get("retries", 2)),
    ) for s in raw]


@dataclass
class RawItem:
    title: str
    url: str
    published: Optional[datetime] = None


def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_rfc822(value: str) -> Optional[datetime]:
    try:
        dt = parsedate_to_datetime(value)
    except (TypeError, ValueError):
        return None
    return dt if dt.tzinfo else dt.replace(tzinfo=timezone.utc)


def _parse_iso(value: str) -> Optional[datetime]:
    try:
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except (TypeError, ValueError):
        return None
    return dt if dt.tzinfo else dt.replace(tzinfo=timezone.utc)


def parse_rss(data: bytes) -> tuple[list[RawItem], int]:
    """RSS 2.0 <rss><channel><item>; title-less items are skipped."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise SourceError("rss", f"malformed XML: {exc}")
    items: list[RawItem] = []
    skipped = 0
    for node in root.iter():
        if _local_name(node.tag) != "item":
            continue
        title = link = pub = None
        for child in node:
            name = _local_name(child.tag)
            if name == "title":
                title = child.text
            elif name == "link":
                link = child.text
            elif name == "pubDate":
                pub = _parse_rfc822(child.text or "")
        if not title or not title.strip() or not link:
            skipped += 1
            continue
        items.append(RawItem(title=title, url=link.strip(), published=pub))
    return items, skipped


def parse_atom(data: bytes) -> tuple[list[RawItem], int]:
    """Atom <feed><entry>; link comes from the href attribute."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise SourceError("atom", f"malformed XML: {exc}")
    items: list[RawItem] = []
    skipped = 0
    for node in root.iter():
        if _local_name(node.tag) != "entry":
            continue
        title = link = None
        pub = None
        for child in node:
            name = _local_name(child.tag)
            if name == "title":
                title = child.text
            elif name == "link" and link is None:
                link = child.get("href")
            elif name in ("published", "updated") and pub is None:
                pub = _parse_iso(child.text or "")
        if not title or not title.strip() or not link:
            skipped += 1
            continue
        items.append(RawItem(title=title, url=link.strip(), published=pub))
    return items, skipped


def parse_json_api(data: bytes) -> tuple[list[RawItem], int]:
    """Generic news-API shape: {"articles":[{"title","url","publishedAt"}]}."""
    try:
        obj = json.loads(data)
        articles = obj["articles"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SourceError("json_api", f"unexpected payload: {exc}")
    items: list[RawItem] = []
    skipped = 0
    for entry in articles:
        if not isinstance(entry, dict):
            skipped += 1
            continue
        title = entry.get("title")
        url = entry.get("url")
        if not title or not str(title).strip() or not url:
            skipped += 1
            continue
        pub = _parse_iso(str(entry.get("publishedAt", "")))
        items.append(RawItem(title=str(title), url=str(url), published=pub))
    return items, skipped


_PARSERS = {"rss": parse_rss, "atom": parse_atom, "json_api": parse_json_api}


class HttpFetcher:
    """HTTP GET with per-host rate limiting and retry backoff.

    The clock and sleep functions are injectable so the rate limiter is
    testable without real waiting.
    """

    def __init__(self, client: Optional[httpx.Client] = None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self._client = client or httpx.Client(follow_redirects=True)
        self._clock = clock
        self._sleep = sleep
        self._last_request: dict[str, float] = {}
        self._lock = threading.Lock()

    def _throttle(self, host: str, rate: float):
        if rate <= 0:
            return
        min_interval = 1.0 / rate
        with self._lock:
            last = self._last_request.get(host)
            now = self._clock()
            wait = 0.0 if last is None else max(0.0, last + min_interval - now)
            self._last_request[host] = now + wait
        if wait > 0:
            self._sleep(wait)

    def get(self, url: str, timeout: float, retries: int, rate: float) -> bytes:
        host = urlsplit(url).netloc.lower()
        backoff = 1.0
        attempts = retries + 1
        for attempt in range(attempts):
            self._throttle(host, rate)
            try:
                resp = self._client.get(url, timeout=timeout)
                if resp.status_code == 200:
                    return resp.content
                error = f"http {resp.status_code}"
            except httpx.HTTPError as exc:
                error = f"transport: {exc}"
            if attempt + 1 < attempts:
                self._sleep(backoff)
                backoff *= 2
        raise SourceError(url, f"{error} after {attempts} attempt(s)")


def fetch_source(src: SourceConfig, fetcher: Optional[HttpFetcher] = None
                 ) -> tuple[list[RawItem], int]:
    """Fetch and parse one source; returns (items, skipped item count)."""
    fetcher = fetcher or HttpFetcher()
    try:
        data = fetcher.get(src.url, src.timeout, src.retries, src.per_host_rate_limit)
    except SourceError as exc:
        raise SourceError(src.name, exc.reason) from exc
    try:
        return _PARSERS[src.kind](data)
    except SourceError as exc:
        raise SourceError(src.name, exc.reason) from exc


def normalize(raw: RawItem, src: SourceConfig,
              fetched_at: Optional[datetime] = None) -> Optional[Article]:
    """Raw item to Article; returns None when the title normalizes away."""
    if not normalize_title(raw.title):
        return None
    fetched_at = fetched_at or datetime.now(timezone.utc)
    return Article.create(
        title=raw.title,
        url=raw.url,
        source_name=src.name,
        published_at=raw.published,
        fetched_at=fetched_at,
    )


def dedup_key(title: str, url: str) -> str:
    """Content key on the tokenized title + canonical host and path, so
    the same story survives casing, punctuation, and tracking-param
    differences."""
    parts = urlsplit(canonicalize_url(url))
    key = " ".join(tokenize(title)) + "\x1f" + parts.netloc + parts.path
    return format(fnv1a64(key.encode("utf-8")), "016x")


@dataclass
class DedupWindow:
    """Time-bounded set of content keys; entries age out after `horizon`."""

    seen: dict[str, datetime] = field(default_factory=dict)
    horizon: timedelta = timedelta(days=DEDUP_HORIZON_DAYS)

    def evict(self, now: datetime):
        cutoff = now - self.horizon
        self.seen = {k: t for k, t in self.seen.items() if t > cutoff}

    def to_dict(self) -> dict[str, str]:
        return {k: t.isoformat() for k, t in self.seen.items()}

    @classmethod
    def from_dict(cls, obj: dict[str, str]) -> "DedupWindow":
        return cls(seen={k: datetime.fromisoformat(t) for k, t in obj.items()})


def dedup(articles: list[Article], window: DedupWindow,
          now: Optional[datetime] = None) -> tuple[list[Article], DedupWindow]:
    """Keep articles whose key is unseen within the horizon; the window is
    evicted first and updated with the fresh keys."""
    now = now or datetime.now(timezone.utc)
    window.evict(now)
    fresh = []
    for article in articles:
        key = dedup_key(article.title, article.url)
        if key in window.seen:
            continue
        window.seen[key] = now
        fresh.append(article)
    return fresh, window


def run_daily(sources: list[SourceConfig], window: DedupWindow, cfg: CascadeConfig,
              models: CascadeModels, store: Store,
              for_date: Optional[date_type] = None,
              fetcher: Optional[HttpFetcher] = None,
              now: Optional[datetime] = None) -> dict:
    """One daily ingestion run: fetch -> normalize -> dedup -> cascade ->
    persist. The feed publish is atomic and happens last; a date can only
    ever be published once."""
    now = now or datetime.now(timezone.utc)
    for_date = for_date or now.date()
    if store.feed_path(for_date).exists():
        raise AlreadyPublished(f"feed for {for_date.isoformat()} already published")
    fetcher = fetcher or HttpFetcher()

    parsed: list[tuple[SourceConfig, RawItem]] = []
    source_errors: list[str] = []
    skipped = 0

    def fetch_one(src: SourceConfig):
        return src, fetch_source(src, fetcher)

    with ThreadPoolExecutor(max_workers=MAX_CONCURRENT_FETCHES) as pool:
        for src, outcome in pool.map(
                lambda s: _isolate(fetch_one, s), sources):
            if isinstance(outcome, SourceError):
                source_errors.append(str(outcome))
                continue
            items, src_skipped = outcome
            skipped += src_skipped
            parsed.extend((src, item) for item in items)
    # "fetched" counts every item the sources yielded, parseable or not,
    # so that fetched = skipped + deduped + entered_cascade.
    fetched_count = len(parsed) + skipped

    articles: list[Article] = []
    for src, item in parsed:
        article = normalize(item, src, fetched_at=now)
        if article is None:
            skipped += 1
        else:
            articles.append(article)

    before_dedup = len(articles)
    fresh, window = dedup(articles, window, now=now)
    deduped = before_dedup - len(fresh)

    accepted, verdicts = run_cascade(fresh, cfg, models)
    stats = cascade_stats(verdicts)

    store.append_articles(fresh, [v.to_dict() for v in verdicts])
    queue_entries = []
    verdict_by_id = {v.article_id: v for v in verdicts}
    for article in fresh:
        verdict = verdict_by_id[article.id]
        if verdict.final == "borderline":
            queue_entries.append({
                "article_id": article.id,
                "title": article.title,
                "url": article.url,
                "source": article.source_name,
                "mean_score": verdict.mean_score,
                "enqueued_at": now.isoformat(),
                "stages": [e.to_dict() for e in verdict.entries],
            })
    store.enqueue(queue_entries)

    finals = [v.final for v in verdicts]
    report = {
        "date": for_date.isoformat(),
        "sources": len(sources),
        "source_errors": source_errors,
        "fetched": fetched_count,
        "skipped": skipped,
        "deduped": deduped,
        "entered_cascade": len(fresh),
        "accepted": len(accepted),
        "capped": sum(1 for f in finals if f == "capped"),
        "borderline": len(queue_entries),
        "rejected": sum(1 for f in finals if f.startswith("rejected:")),
        "stats": stats,
        "model_ids": dict(getattr(models, "artifact_ids", {})),
    }
    store.save_run(for_date, report)

    feed = FeedRecord(
        date=for_date,
        articles=[{"id": a.id, "mean_score": verdict_by_id[a.id].mean_score}
                  for a in accepted],
    )
    store.publish_feed(feed)
    store.save_dedup_window(window.to_dict())
    report["published"] = True
    return report


def _isolate(fn, src):
    """Run one source fetch, converting failures into values so a bad
    source cannot take down the batch."""
    try:
        return fn(src)
    except SourceError as exc:
        return src, exc
    except Exception as exc:  # defensive: parser bugs stay isolated too
        return src, SourceError(src.name, f"unexpected: {exc}")
