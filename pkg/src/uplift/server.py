"""HTTP API over the store: daily feed, article verdict trails, the
curation queue with verdict submission, per-run stats, and health.

All responses are JSON. Errors use the body {"error": code, "message":
...}. Read endpoints are side-effect free; the only mutation is the
curation verdict POST, which funnels through the store's single writer.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from datetime import date as date_type
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .errors import ConfigError, NotFound
from .pipeline import CascadeConfig
from .runtime import load_cascade_models
from .store import Store, VERDICT_LABELS

MAX_PAGE_SIZE = 100


@dataclass
class ApiConfig:
    data_dir: str
    cascade_config_path: Optional[str] = None
    cors_origins: list[str] = dc_field(default_factory=list)
    max_page_size: int = MAX_PAGE_SIZE


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class FeedItem(BaseModel):
    id: str
    title: str
    url: str
    source: str
    mean_score: float


class FeedResponse(BaseModel):
    date: str
    articles: list[FeedItem]


class StageEntryOut(BaseModel):
    stage: str
    score: float
    passed: bool


class VerdictOut(BaseModel):
    entries: list[StageEntryOut]
    final: str
    mean_score: float
    error: Optional[str] = None


class ArticleResponse(BaseModel):
    id: str
    title: str
    url: str
    source: str
    published_at: str
    fetched_at: str
    verdict: VerdictOut


class QueueItem(BaseModel):
    article_id: str
    title: str
    url: str
    source: str
    mean_score: float
    enqueued_at: str
    stages: list[StageEntryOut]


class QueueResponse(BaseModel):
    items: list[QueueItem]
    total: int


class VerdictIn(BaseModel):
    label: str


class VerdictAck(BaseModel):
    status: str
    article_id: str
    queue_size: int


class StatsResponse(BaseModel):
    date: str
    stages: list[dict]
    model_ids: dict
    counts: dict


def _clamp_limit(limit: Optional[int], cap: int) -> int:
    if limit is None or limit < 0:
        return cap
    return min(limit, cap)


def create_app(config: ApiConfig) -> FastAPI:
    app = FastAPI(title="uplift", docs_url=None, redoc_url=None)
    store = Store(config.data_dir)
    app.state.store = store
    app.state.config = config
    app.state.models = None

    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.cors_origins,
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    @app.exception_handler(ApiError)
    async def api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": "bad_request", "message": str(exc)})

    def parse_date(raw: Optional[str]) -> Optional[date_type]:
        if raw is None:
            return None
        try:
            return date_type.fromisoformat(raw)
        except ValueError:
            raise ApiError(400, "bad_date", f"not an ISO date: {raw!r}")

    @app.get("/v1/feed", response_model=FeedResponse)
    def get_feed(date: Optional[str] = None, limit: Optional[int] = None):
        wanted = parse_date(date) or store.latest_feed_date()
        if wanted is None:
            raise ApiError(404, "no_feed", "no feed has been published yet")
        record = store.load_feed(wanted)
        if record is None:
            raise ApiError(404, "no_feed", f"no feed published for {wanted.isoformat()}")
        articles, _ = store.read_articles()
        items = []
        for entry in record.articles[:_clamp_limit(limit, config.max_page_size)]:
            meta = articles.get(entry["id"], {})
            items.append(FeedItem(
                id=entry["id"],
                title=meta.get("title", ""),
                url=meta.get("url", ""),
                source=meta.get("source", ""),
                mean_score=entry["mean_score"],
            ))
        return FeedResponse(date=wanted.isoformat(), articles=items)

    @app.get("/v1/articles/{article_id}", response_model=ArticleResponse)
    def get_article(article_id: str):
        articles, _ = store.read_articles()
        row = articles.get(article_id)
        if row is None:
            raise ApiError(404, "not_found", f"unknown article: {article_id}")
        verdict = row.get("verdict", {})
        return ArticleResponse(
            id=row["id"],
            title=row["title"],
            url=row["url"],
            source=row["source"],
            published_at=row["published_at"],
            fetched_at=row["fetched_at"],
            verdict=VerdictOut(
                entries=[StageEntryOut(**e) for e in verdict.get("entries", [])],
                final=verdict.get("final", "unknown"),
                mean_score=verdict.get("mean_score", 0.0),
                error=verdict.get("error"),
            ),
        )

    @app.get("/v1/queue", response_model=QueueResponse)
    def get_queue(limit: Optional[int] = None):
        rows = store.read_queue()
        capped = rows[:_clamp_limit(limit, config.max_page_size)]
        items = [QueueItem(
            article_id=r["article_id"],
            title=r["title"],
            url=r["url"],
            source=r["source"],
            mean_score=r["mean_score"],
            enqueued_at=r["enqueued_at"],
            stages=[StageEntryOut(**e) for e in r.get("stages", [])],
        ) for r in capped]
        return QueueResponse(items=items, total=len(rows))

    @app.post("/v1/queue/{article_id}/verdict", response_model=VerdictAck)
    def post_verdict(article_id: str, body: VerdictIn):
        if body.label not in VERDICT_LABELS:
            raise ApiError(400, "invalid_label",
                           f"label must be one of {', '.join(VERDICT_LABELS)}")
        try:
            size = store.record_curator_verdict(article_id, body.label)
        except NotFound as exc:
            raise ApiError(404, "not_found", str(exc))
        return VerdictAck(status="ok", article_id=article_id, queue_size=size)

    @app.get("/v1/stats", response_model=StatsResponse)
    def get_stats(date: Optional[str] = None):
        wanted = parse_date(date)
        if wanted is None:
            dates = sorted(p.stem for p in store.runs_dir.glob("*.json"))
            if not dates:
                raise ApiError(404, "no_run", "no pipeline run recorded yet")
            wanted = date_type.fromisoformat(dates[-1])
        run = store.load_run(wanted)
        if run is None:
            raise ApiError(404, "no_run", f"no pipeline run for {wanted.isoformat()}")
        counts = {k: run.get(k) for k in
                  ("fetched", "skipped", "deduped", "entered_cascade",
                   "accepted", "capped", "borderline", "rejected")}
        return StatsResponse(
            date=run["date"],
            stages=run.get("stats", {}).get("stages", []),
            model_ids=run.get("model_ids", {}),
            counts=counts,
        )

    @app.get("/healthz")
    def healthz():
        if not store.data_dir.is_dir() or not store.models_dir.is_dir():
            raise ApiError(503, "unhealthy", "store directories missing")
        try:
            store.read_articles()
        except Exception as exc:
            raise ApiError(503, "unhealthy", f"store unreadable: {exc}")
        if config.cascade_config_path:
            if app.state.models is None:
                try:
                    cfg = CascadeConfig.load(config.cascade_config_path)
                    app.state.models = load_cascade_models(cfg, store)
                except (ConfigError, OSError) as exc:
                    raise ApiError(503, "unhealthy", f"models not loaded: {exc}")
        return PlainTextResponse("ok")

    return app
