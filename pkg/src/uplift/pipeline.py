"""Cascade orchestration: ordered stages filter an article batch, each
stage seeing only the survivors of the previous one.

Every article carries a verdict trail of (stage, score, passed) entries.
Rejected articles whose mean executed-stage score lands in the borderline
band go to the human curation queue; survivors are ranked by mean stage
score and cut to the daily cap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import Article, fnv1a64, normalize_title
from .errors import ConfigError, StageFailure
from .features import (DEFAULT_SEQUENCE_LENGTH, Vocabulary, encode_sequence,
                       tokenize, vectorize_tfidf)
from .lstm import LstmParams, lstm_predict
from .mlp import MlpModel, mlp_forward
from .strict import OrdinalModel, RemoteRater, StrictPolicy, accept, positive_mass, rate, remote_rate
from .svm import SvmModel, svm_score

STAGE_NAMES = ("sequential", "lstm", "svm", "strict")
DEFAULT_THRESHOLD = 0.5
STRICT_MODE_THRESHOLD = 0.7


@dataclass
class StageSpec:
    name: str
    threshold: float = DEFAULT_THRESHOLD
    model_ref: str = ""


@dataclass
class CascadeConfig:
    stages: list[StageSpec]
    daily_cap: int = 15
    borderline_low: float = 0.4
    borderline_high: float = 0.6
    # Optional strict-stage overrides; interpreted by the runtime loader.
    strict_policy: Optional[dict] = None
    strict_remote: Optional[dict] = None

    def __post_init__(self):
        if not self.stages:
            raise ConfigError("cascade needs at least one stage")
        names = [s.name for s in self.stages]
        if len(set(names)) != len(names):
            raise ConfigError("stage names must be unique")
        for stage in self.stages:
            if stage.name not in STAGE_NAMES:
                raise ConfigError(f"unknown stage: {stage.name}")
            if not 0.0 <= stage.threshold <= 1.0:
                raise ConfigError(f"threshold out of range for {stage.name}")
        if self.daily_cap < 1:
            raise ConfigError("daily_cap must be >= 1")

    @classmethod
    def from_dict(cls, obj: dict) -> "CascadeConfig":
        stages = [StageSpec(name=s["name"],
                            threshold=float(s.get("threshold", DEFAULT_THRESHOLD)),
                            model_ref=s.get("model", ""))
                  for s in obj.get("stages", [])]
        band = obj.get("borderline", [0.4, 0.6])
        return cls(stages=stages,
                   daily_cap=int(obj.get("daily_cap", 15)),
                   borderline_low=float(band[0]),
                   borderline_high=float(band[1]),
                   strict_policy=obj.get("strict_policy"),
                   strict_remote=obj.get("strict_remote"))

    @classmethod
    def load(cls, path: str) -> "CascadeConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"cannot load cascade config {path}: {exc}") from exc

    def to_dict(self) -> dict:
        out = {
            "stages": [{"name": s.name, "threshold": s.threshold, "model": s.model_ref}
                       for s in self.stages],
            "daily_cap": self.daily_cap,
            "borderline": [self.borderline_low, self.borderline_high],
        }
        if self.strict_policy is not None:
            out["strict_policy"] = self.strict_policy
        if self.strict_remote is not None:
            out["strict_remote"] = self.strict_remote
        return out


@dataclass
class StageResult:
    stage: str
    score: float
    passed: bool

    def to_dict(self) -> dict:
        return {"stage": self.stage, "score": self.score, "passed": self.passed}


@dataclass
class Verdict:
    """Per-article trail: one entry per executed stage, plus the outcome.

    final is one of "accepted", "capped", "borderline", or
    "rejected:<stage>"; capped articles passed every stage but fell
    outside the daily top-N.
    """

    article_id: str
    entries: list[StageResult] = field(default_factory=list)
    final: str = "rejected:none"
    error: Optional[str] = None

    @property
    def mean_score(self) -> float:
        if not self.entries:
            return 0.0
        return float(np.mean([e.score for e in self.entries]))

    @property
    def accepted(self) -> bool:
        return self.final == "accepted"

    def to_dict(self) -> dict:
        d = {
            "article_id": self.article_id,
            "entries": [e.to_dict() for e in self.entries],
            "final": self.final,
            "mean_score": self.mean_score,
        }
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        return cls(
            article_id=d["article_id"],
            entries=[StageResult(e["stage"], e["score"], e["passed"])
                     for e in d.get("entries", [])],
            final=d["final"],
            error=d.get("error"),
        )


@dataclass
class CascadeModels:
    """Loaded models plus the shared featurizer the stages consume.

    run_cascade and score_headline talk to this object only through
    require(), stage_score(), and strict_batch(), so alternative scorers
    (or stubs in tests) can stand in.
    """

    vocab: Vocabulary
    mlp: Optional[MlpModel] = None
    lstm: Optional[LstmParams] = None
    svm: Optional[SvmModel] = None
    ordinal: Optional[OrdinalModel] = None
    policy: StrictPolicy = field(default_factory=StrictPolicy)
    remote: Optional[RemoteRater] = None
    sequence_length: int = DEFAULT_SEQUENCE_LENGTH
    artifact_ids: dict = field(default_factory=dict)

    def require(self, stage: str):
        needed = {"sequential": self.mlp, "lstm": self.lstm, "svm": self.svm}
        if stage in needed and needed[stage] is None:
            raise ConfigError(f"no model loaded for stage {stage}")
        if stage == "strict" and self.ordinal is None and self.remote is None:
            raise ConfigError("no model loaded for stage strict")

    def stage_score(self, stage: str, tokens: list[str]) -> float:
        if stage == "sequential":
            return mlp_forward(self.mlp, vectorize_tfidf(tokens, self.vocab))
        if stage == "lstm":
            return lstm_predict(self.lstm,
                                encode_sequence(tokens, self.vocab, self.sequence_length))
        if stage == "svm":
            return svm_score(self.svm, vectorize_tfidf(tokens, self.vocab))
        raise ConfigError(f"unknown stage: {stage}")

    def _local_strict(self, tokens: list[str]) -> tuple[float, bool]:
        rating, probs = rate(self.ordinal, vectorize_tfidf(tokens, self.vocab))
        return positive_mass(probs, self.policy), accept(rating, probs, self.policy)

    def strict_batch(self, texts: list[str],
                     token_lists: list[list[str]]) -> list[tuple[float, bool]]:
        """Strict-stage (mass, accepted) per text; any remote failure
        rejects the whole batch with zero scores (fail-closed)."""
        if self.remote is not None:
            out: list[tuple[float, bool]] = []
            for start in range(0, len(texts), self.remote.max_batch):
                chunk = texts[start:start + self.remote.max_batch]
                try:
                    rated = remote_rate(self.remote, chunk)
                    for rating, probs in rated:
                        out.append((positive_mass(probs, self.policy),
                                    accept(rating, probs, self.policy)))
                except StageFailure:
                    out.extend((0.0, False) for _ in chunk)
            return out
        return [self._local_strict(tokens) for tokens in token_lists]


def run_cascade(articles: list[Article], cfg: CascadeConfig,
                models: CascadeModels) -> tuple[list[Article], list[Verdict]]:
    """Filter a batch. Returns (feed articles, one verdict per input in
    input order).

    Stages short-circuit: a rejected article never reaches later stages.
    Survivors of all stages are ranked by mean stage score; the top
    daily_cap are accepted and the remainder marked capped.
    """
    for stage in cfg.stages:
        models.require(stage.name)

    verdicts = {a.id: Verdict(article_id=a.id) for a in articles}
    tokens_by_id = {}
    survivors: list[Article] = []
    for article in articles:
        tokens = tokenize(article.title)
        if not tokens:
            v = verdicts[article.id]
            v.final = "rejected:featurize"
            v.error = "title empty after tokenization"
            continue
        tokens_by_id[article.id] = tokens
        survivors.append(article)

    for spec in cfg.stages:
        if not survivors:
            break
        if spec.name == "strict":
            results = models.strict_batch([a.title for a in survivors],
                                          [tokens_by_id[a.id] for a in survivors])
        else:
            results = []
            for article in survivors:
                score = models.stage_score(spec.name, tokens_by_id[article.id])
                results.append((score, score >= spec.threshold))
        next_survivors = []
        for article, (score, passed) in zip(survivors, results):
            verdicts[article.id].entries.append(StageResult(spec.name, score, passed))
            if passed:
                next_survivors.append(article)
            else:
                verdicts[article.id].final = f"rejected:{spec.name}"
        survivors = next_survivors

    # Borderline band applies to rejected articles only.
    for v in verdicts.values():
        if v.final.startswith("rejected:") and v.entries:
            if cfg.borderline_low <= v.mean_score < cfg.borderline_high:
                v.final = "borderline"

    # Rank the full-pass survivors and apply the daily cap.
    position = {a.id: k for k, a in enumerate(articles)}
    ranked = sorted(survivors, key=lambda a: (-verdicts[a.id].mean_score, position[a.id]))
    accepted = ranked[:cfg.daily_cap]
    for article in accepted:
        verdicts[article.id].final = "accepted"
    for article in ranked[cfg.daily_cap:]:
        verdicts[article.id].final = "capped"

    return accepted, [verdicts[a.id] for a in articles]


def cascade_stats(verdicts: list[Verdict]) -> dict:
    """Per-stage in/passed/rejected counts; passed(i) equals in(i+1)."""
    order: list[str] = []
    counts: dict[str, dict] = {}
    for v in verdicts:
        for entry in v.entries:
            if entry.stage not in counts:
                order.append(entry.stage)
                counts[entry.stage] = {"in": 0, "passed": 0, "rejected": 0}
            counts[entry.stage]["in"] += 1
            counts[entry.stage]["passed" if entry.passed else "rejected"] += 1
    return {"stages": [{"name": name, **counts[name]} for name in order]}


def score_headline(text: str, cfg: CascadeConfig, models: CascadeModels) -> Verdict:
    """Run every stage on one headline without short-circuiting, so all
    stage scores are visible even after a failure."""
    for stage in cfg.stages:
        models.require(stage.name)
    vid = format(fnv1a64(normalize_title(text).encode("utf-8")), "016x")
    verdict = Verdict(article_id=vid)
    tokens = tokenize(text)
    if not tokens:
        verdict.final = "rejected:featurize"
        verdict.error = "text empty after tokenization"
        return verdict

    first_fail = None
    for spec in cfg.stages:
        if spec.name == "strict":
            score, passed = models.strict_batch([text], [tokens])[0]
        else:
            score = models.stage_score(spec.name, tokens)
            passed = score >= spec.threshold
        verdict.entries.append(StageResult(spec.name, score, passed))
        if not passed and first_fail is None:
            first_fail = spec.name

    if first_fail is None:
        verdict.final = "accepted"
    else:
        verdict.final = f"rejected:{first_fail}"
        if cfg.borderline_low <= verdict.mean_score < cfg.borderline_high:
            verdict.final = "borderline"
    return verdict
