"""Shared fixtures: the bundled corpus, session-scoped trained models,
and the acceptance-criteria reporter."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from uplift import corpus, features, lstm, mlp, strict, svm
from uplift.optim import TrainConfig
from uplift.pipeline import CascadeModels

REPO_ROOT = Path(__file__).resolve().parent.parent
BUNDLED = REPO_ROOT / "data" / "bundled"

# One line per acceptance criterion, printed in the terminal summary.
_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_makereport(item, call):
    if call.when != "call" or "test_acceptance" not in str(item.fspath):
        return
    label = item.function.__doc__ or item.name
    label = label.strip().splitlines()[0]
    _ACCEPTANCE_RESULTS[label] = "FAIL" if call.excinfo else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label, outcome in _ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"[{outcome}] {label}")


@dataclass
class Bundle:
    """Bundled corpus, shared vocabulary, and the four trained models."""

    binary: list[corpus.LabeledExample]
    ordinal: list[corpus.LabeledExample]
    holdout: list[corpus.LabeledExample]
    vocab: features.Vocabulary
    mlp_model: mlp.MlpModel
    lstm_model: lstm.LstmParams
    svm_model: svm.SvmModel
    ordinal_model: strict.OrdinalModel
    train: list[corpus.LabeledExample]
    test: list[corpus.LabeledExample]

    def tfidf(self, text: str) -> features.FeatureVector:
        return features.vectorize_tfidf(features.tokenize(text), self.vocab)

    def sequence(self, text: str) -> features.TokenSequence:
        return features.encode_sequence(features.tokenize(text), self.vocab)

    def tfidf_pairs(self, examples):
        return [(self.tfidf(e.text), e.label) for e in examples]

    def seq_pairs(self, examples):
        return [(self.sequence(e.text), e.label) for e in examples]

    def models(self, **overrides) -> CascadeModels:
        kwargs = dict(vocab=self.vocab, mlp=self.mlp_model, lstm=self.lstm_model,
                      svm=self.svm_model, ordinal=self.ordinal_model)
        kwargs.update(overrides)
        return CascadeModels(**kwargs)


@pytest.fixture(scope="session")
def bundle() -> Bundle:
    binary = corpus.load_dataset(str(BUNDLED / "binary_train.csv"), "headlines_csv").examples
    ordinal_ex = corpus.load_dataset(str(BUNDLED / "ordinal_train.csv"), "ratings_csv").examples
    holdout = corpus.load_dataset(str(BUNDLED / "holdout_200.csv"), "headlines_csv").examples
    split = corpus.split_dataset(binary, seed=42, ratio=0.8)

    docs = [features.tokenize(e.text) for e in binary + ordinal_ex]
    vocab = features.build_vocabulary(docs, max_size=20_000)

    def tfidf_pairs(examples):
        return [(features.vectorize_tfidf(features.tokenize(e.text), vocab), e.label)
                for e in examples]

    def seq_pairs(examples):
        return [(features.encode_sequence(features.tokenize(e.text), vocab), e.label)
                for e in examples]

    mlp_model, _ = mlp.train_mlp(tfidf_pairs(split.train),
                                 TrainConfig(seed=42, max_epochs=15))
    lstm_model, _ = lstm.train_lstm(seq_pairs(split.train),
                                    TrainConfig(seed=42, max_epochs=8),
                                    vocab_size=vocab.sequence_vocab_size)
    svm_model = svm.train_svm(tfidf_pairs(split.train), lam=1e-4, epochs=20, seed=42)
    ordinal_model, _ = strict.train_ordinal(tfidf_pairs(ordinal_ex),
                                            TrainConfig(seed=42, max_epochs=80))
    return Bundle(
        binary=binary, ordinal=ordinal_ex, holdout=holdout, vocab=vocab,
        mlp_model=mlp_model, lstm_model=lstm_model, svm_model=svm_model,
        ordinal_model=ordinal_model, train=split.train, test=split.test,
    )


def make_trained_store(root: Path, bundle: Bundle, daily_cap: int = 15,
                       threshold: float = 0.5) -> tuple:
    """Store populated with the bundle's artifacts plus a cascade config
    file referencing them by id. Returns (store, config_path)."""
    import json

    from uplift.artifacts import pack_lstm, pack_mlp, pack_ordinal, pack_svm
    from uplift.store import Store

    store = Store(root)
    vocab_id = store.save_vocab(bundle.vocab)
    refs = {
        "sequential": store.save_model(pack_mlp(bundle.mlp_model, vocab_id)),
        "lstm": store.save_model(pack_lstm(bundle.lstm_model, vocab_id, 30)),
        "svm": store.save_model(pack_svm(bundle.svm_model, vocab_id)),
        "strict": store.save_model(pack_ordinal(bundle.ordinal_model, vocab_id)),
    }
    config = {
        "stages": [{"name": name, "threshold": threshold, "model": refs[name]}
                   for name in ("sequential", "lstm", "svm", "strict")],
        "daily_cap": daily_cap,
        "borderline": [0.4, 0.6],
    }
    config_path = root / "cascade.json"
    config_path.write_text(json.dumps(config, indent=2))
    return store, config_path


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1e-6, abs(analytic), abs(numeric))


def finite_difference(loss_fn, params: list[np.ndarray], h: float = 1e-5,
                      skip=None) -> list[np.ndarray]:
    """Central-difference gradients of loss_fn() w.r.t. each array in
    params, mutating entries in place. `skip(k, idx)` excludes frozen
    coordinates."""
    grads = [np.zeros_like(p) for p in params]
    for k, p in enumerate(params):
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            if skip is not None and skip(k, idx):
                continue
            orig = p[idx]
            p[idx] = orig + h
            up = loss_fn()
            p[idx] = orig - h
            down = loss_fn()
            p[idx] = orig
            grads[k][idx] = (up - down) / (2.0 * h)
    return grads


def max_relative_error(analytic: list[np.ndarray], numeric: list[np.ndarray],
                       skip=None) -> float:
    worst = 0.0
    for k, (ga, gn) in enumerate(zip(analytic, numeric)):
        it = np.nditer(ga, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            if skip is not None and skip(k, idx):
                continue
            worst = max(worst, relative_error(float(ga[idx]), float(gn[idx])))
    return worst
