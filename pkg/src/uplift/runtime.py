"""Wire stored artifacts into a ready-to-run cascade."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .artifacts import ModelArtifact, unpack_model
from .errors import ConfigError, IoError, NotFound
from .features import DEFAULT_SEQUENCE_LENGTH, Vocabulary
from .pipeline import CascadeConfig, CascadeModels
from .store import Store
from .strict import RemoteRater, StrictPolicy

_STAGE_TO_TYPE = {"sequential": "mlp", "lstm": "lstm", "svm": "svm", "strict": "ordinal"}
_TYPE_TO_SLOT = {"mlp": "mlp", "lstm": "lstm", "svm": "svm", "ordinal": "ordinal"}


def load_model_file(path: str | Path):
    """Load a free-standing artifact plus its vocabulary.

    Returns (model, vocabulary, artifact). The vocab_ref is resolved as a
    path relative to the artifact file, then as an absolute path.
    """
    path = Path(path)
    if not path.exists():
        raise IoError(f"model artifact not found: {path}")
    artifact = ModelArtifact.from_json(path.read_text(encoding="utf-8"))
    artifact.source_path = path
    candidates = (path.parent / artifact.vocab_ref,
                  path.parent / f"vocab-{artifact.vocab_ref}.json",
                  Path(artifact.vocab_ref))
    for candidate in candidates:
        if artifact.vocab_ref and candidate.exists():
            vocab = Vocabulary.from_json(candidate.read_text(encoding="utf-8"))
            return unpack_model(artifact), vocab, artifact
    raise ConfigError(f"vocabulary {artifact.vocab_ref!r} for {path} not found")


def load_cascade_models(cfg: CascadeConfig, store: Store) -> CascadeModels:
    """Load every stage's artifact plus the shared vocabulary.

    All stages must have been trained against the same vocabulary; the
    strict stage may instead point at a remote rater, in which case its
    model_ref is optional.
    """
    policy = StrictPolicy(**cfg.strict_policy) if cfg.strict_policy else StrictPolicy()
    remote = RemoteRater(**cfg.strict_remote) if cfg.strict_remote else None
    models = CascadeModels(vocab=None, policy=policy, remote=remote)  # type: ignore[arg-type]

    vocab_ref: Optional[str] = None
    vocab_anchor = None
    sequence_length = DEFAULT_SEQUENCE_LENGTH
    for spec in cfg.stages:
        if spec.name == "strict" and remote is not None and not spec.model_ref:
            continue
        if not spec.model_ref:
            raise ConfigError(f"stage {spec.name} has no model reference")
        try:
            artifact = store.load_model(spec.model_ref)
        except NotFound as exc:
            raise ConfigError(str(exc)) from exc
        expected = _STAGE_TO_TYPE[spec.name]
        if artifact.model_type != expected:
            raise ConfigError(
                f"stage {spec.name} expects a {expected} artifact, "
                f"got {artifact.model_type}")
        setattr(models, _TYPE_TO_SLOT[artifact.model_type], unpack_model(artifact))
        models.artifact_ids[spec.name] = spec.model_ref
        if artifact.model_type == "lstm":
            sequence_length = int(
                artifact.hyperparams.get("sequence_length", DEFAULT_SEQUENCE_LENGTH))
        if artifact.vocab_ref:
            if vocab_ref is not None and vocab_ref != artifact.vocab_ref:
                raise ConfigError("stages were trained against different vocabularies")
            vocab_ref = artifact.vocab_ref
            if artifact.source_path is not None:
                vocab_anchor = artifact.source_path.parent

    if vocab_ref is None:
        raise ConfigError("no vocabulary reference found in any stage artifact")
    try:
        models.vocab = store.load_vocab(vocab_ref, relative_to=vocab_anchor)
    except NotFound as exc:
        raise ConfigError(str(exc)) from exc
    models.sequence_length = sequence_length
    return models
