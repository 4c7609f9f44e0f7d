"""Operator command surface.

Subcommands: analyze, train, eval, rate, run-pipeline, serve, gen-corpus.
Exit codes: 0 success, 1 usage error, 2 data error, 3 io/network error.
The CLI is a thin layer over the core package; `serve` hands off to the
HTTP service.
"""

from __future__ import annotations

import csv
import io
import json
import sys
import time
from datetime import date as date_type
from pathlib import Path

import click
import numpy as np

from . import corpus, features, ingest, lstm, mlp, strict, svm
from .artifacts import pack_lstm, pack_mlp, pack_ordinal, pack_svm
from .errors import (ConfigError, DataError, DegenerateData, IoError,
                     SourceError, UpliftError)
from .optim import TrainConfig
from .pipeline import CascadeConfig, score_headline
from .runtime import load_cascade_models, load_model_file
from .store import Store, atomic_write
from .synth import DEFAULT_SEED as SYNTH_SEED
from .synth import write_bundled_corpus

_BINARY_DEFAULT_FORMAT = "headlines_csv"
_FORMAT_BY_MODEL = {"mlp": _BINARY_DEFAULT_FORMAT, "lstm": _BINARY_DEFAULT_FORMAT,
                    "svm": _BINARY_DEFAULT_FORMAT, "ordinal": "ratings_csv"}


@click.group()
def cli():
    """News-positivity cascade: train it, run it, serve it."""


def _scorer(model_type: str, model, vocab, sequence_length: int):
    """Returns text -> (score in [0,1], predicted binary label)."""
    policy = strict.StrictPolicy()

    def run(text: str):
        tokens = features.tokenize(text)
        if model_type == "mlp":
            p = mlp.mlp_forward(model, features.vectorize_tfidf(tokens, vocab))
            return p, int(p >= 0.5)
        if model_type == "lstm":
            seq = features.encode_sequence(tokens, vocab, sequence_length)
            p = lstm.lstm_predict(model, seq)
            return p, int(p >= 0.5)
        if model_type == "svm":
            vec = features.vectorize_tfidf(tokens, vocab)
            return svm.svm_score(model, vec), svm.svm_predict(model, vec)
        rating, probs = strict.rate(model, features.vectorize_tfidf(tokens, vocab))
        return strict.positive_mass(probs, policy), int(rating >= policy.min_rating)

    return run


@cli.command()
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--sample", default=10_000, show_default=True,
              help="Headlines sampled (seeded shuffle, first N).")
@click.option("--seed", default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "text"]),
              default="csv", show_default=True)
def analyze(data_path, model_path, sample, seed, fmt):
    """Classify a random sample of a dated headline corpus and report
    sentiment counts plus per-month mean sentiment.

    Monthly means are on the [-1,1] scale (2*score - 1), matching the
    corpus's native score range. In csv mode the month table goes to
    stdout and the count summary to stderr.
    """
    result = corpus.load_dataset(data_path, "headlines_csv")
    examples = result.examples
    if not examples:
        raise DataError(f"no usable rows in {data_path}")
    if sample > len(examples):
        click.echo(f"warning: sample {sample} exceeds dataset size "
                   f"{len(examples)}; clamping", err=True)
        sample = len(examples)
    model, vocab, artifact = load_model_file(model_path)
    seq_len = int(artifact.hyperparams.get("sequence_length",
                                           features.DEFAULT_SEQUENCE_LENGTH))
    run = _scorer(artifact.model_type, model, vocab, seq_len)

    order = np.random.default_rng(seed).permutation(len(examples))[:sample]
    counts = {0: 0, 1: 0}
    monthly: dict[str, list[float]] = {}
    undated = 0
    for idx in order:
        example = examples[idx]
        score, label = run(example.text)
        counts[label] += 1
        if example.date is None:
            undated += 1
            continue
        month = f"{example.date.year:04d}-{example.date.month:02d}"
        monthly.setdefault(month, []).append(2.0 * score - 1.0)

    months = [{"month": m, "mean_score": float(np.mean(v)), "count": len(v)}
              for m, v in sorted(monthly.items())]
    negatives, positives = counts[0], counts[1]
    ratio = negatives / positives if positives else float("inf")
    excess_pct = 100.0 * (negatives - positives) / positives if positives else float("inf")

    if fmt == "json":
        click.echo(json.dumps({
            "sampled": int(sample), "counts": {"negative": negatives, "positive": positives},
            "negative_to_positive_ratio": ratio, "negative_excess_pct": excess_pct,
            "undated": undated, "monthly": months,
        }))
        return
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["month", "mean_score", "count"])
        for row in months:
            writer.writerow([row["month"], row["mean_score"], row["count"]])
        click.echo(out.getvalue(), nl=False)
        click.echo(f"negatives={negatives} positives={positives} "
                   f"ratio={ratio:.4f} excess_pct={excess_pct:.2f}", err=True)
        return
    click.echo(f"sampled {sample} headlines: {negatives} negative, {positives} positive")
    click.echo(f"negative-to-positive ratio {ratio:.4f} ({excess_pct:.2f}% more negatives)")
    for row in months:
        click.echo(f"  {row['month']}  mean {row['mean_score']:+.4f}  n={row['count']}")


def _load_training_data(path: str, fmt: str) -> corpus.LoadResult:
    result = corpus.load_dataset(path, fmt)
    if not result.examples:
        raise DataError(f"no usable rows in {path}")
    return result


def _load_or_build_vocab(vocab_path: Path, texts: list[str], max_vocab: int):
    if vocab_path.exists():
        return features.Vocabulary.from_json(vocab_path.read_text(encoding="utf-8")), False
    vocab = features.build_vocabulary([features.tokenize(t) for t in texts], max_vocab)
    atomic_write(vocab_path, vocab.to_json().encode("utf-8"))
    return vocab, True


@cli.command()
@click.option("--model", "model_type", required=True,
              type=click.Choice(["mlp", "lstm", "svm", "ordinal"]))
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--data-format", type=click.Choice(list(corpus.FORMATS)), default=None,
              help="Defaults to headlines_csv (binary) or ratings_csv (ordinal).")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", type=click.Path(), default=None,
              help="Vocabulary file to reuse or create (default <out>.vocab.json).")
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=30, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.option("--lambda", "lam", default=1e-4, show_default=True,
              help="L2 strength for the SVM.")
@click.option("--max-vocab", default=features.DEFAULT_VOCAB_SIZE, show_default=True)
@click.option("--seq-len", default=features.DEFAULT_SEQUENCE_LENGTH, show_default=True)
@click.option("--embed-dim", default=lstm.DEFAULT_EMBED, show_default=True)
@click.option("--hidden", default=lstm.DEFAULT_HIDDEN, show_default=True,
              help="LSTM hidden size.")
@click.option("--mlp-hidden", default=",".join(str(w) for w in mlp.DEFAULT_HIDDEN),
              show_default=True, help="Comma-separated feed-forward widths.")
@click.option("--val-fraction", default=0.1, show_default=True)
def train(model_type, data_path, data_format, out_path, vocab_path, seed, epochs,
          batch_size, learning_rate, lam, max_vocab, seq_len, embed_dim, hidden,
          mlp_hidden, val_fraction):
    """Train one stage model and write a versioned artifact plus a JSON
    report on stdout."""
    fmt = data_format or _FORMAT_BY_MODEL[model_type]
    result = _load_training_data(data_path, fmt)
    examples = result.examples
    out = Path(out_path)
    vocab_file = Path(vocab_path) if vocab_path else out.parent / (out.stem + ".vocab.json")
    vocab, built = _load_or_build_vocab(vocab_file, [e.text for e in examples], max_vocab)

    cfg = TrainConfig(batch_size=batch_size, max_epochs=epochs, seed=seed,
                      validation_fraction=val_fraction, learning_rate=learning_rate)
    vocab_ref = vocab_file.name if vocab_file.parent == out.parent else str(vocab_file)

    if model_type == "ordinal":
        pairs = [(features.vectorize_tfidf(features.tokenize(e.text), vocab), e.label)
                 for e in examples]
        model, report = strict.train_ordinal(pairs, cfg)
        artifact = pack_ordinal(model, vocab_ref)
    elif model_type == "lstm":
        bad = [e for e in examples if e.label not in (0, 1)]
        if bad:
            raise DataError(f"{len(bad)} rows lack binary labels")
        pairs = [(features.encode_sequence(features.tokenize(e.text), vocab, seq_len),
                  e.label) for e in examples]
        model, report = lstm.train_lstm(pairs, cfg, vocab_size=vocab.sequence_vocab_size,
                                        embed_dim=embed_dim, hidden=hidden)
        artifact = pack_lstm(model, vocab_ref, seq_len)
    else:
        bad = [e for e in examples if e.label not in (0, 1)]
        if bad:
            raise DataError(f"{len(bad)} rows lack binary labels")
        pairs = [(features.vectorize_tfidf(features.tokenize(e.text), vocab), e.label)
                 for e in examples]
        if model_type == "svm":
            model = svm.train_svm(pairs, lam=lam, epochs=epochs, seed=seed)
            correct = sum(svm.svm_predict(model, vec) == label for vec, label in pairs)
            report = {
                "epochs_run": epochs,
                "train_accuracy": correct / len(pairs),
                "objective": svm.svm_objective(model.w, pairs, lam),
            }
            artifact = pack_svm(model, vocab_ref)
        else:
            widths = tuple(int(w) for w in mlp_hidden.split(",") if w.strip())
            model, report = mlp.train_mlp(pairs, cfg, hidden=widths)
            artifact = pack_mlp(model, vocab_ref)

    atomic_write(out, artifact.to_json().encode("utf-8"))
    click.echo(json.dumps({
        "model": model_type,
        "out": str(out),
        "vocab": str(vocab_file),
        "vocab_built": built,
        "examples": len(examples),
        "skipped": result.skipped,
        "dropped": result.dropped,
        "report": report,
    }))


@cli.command(name="eval")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--data-format", type=click.Choice(list(corpus.FORMATS)), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]),
              default="text", show_default=True)
def eval_cmd(model_path, data_path, data_format, fmt):
    """Accuracy, confusion matrix, false-positive rate, and leak count.

    A leak is a negative example the model lets through as positive; for
    ordinal models, negative means rating <= 2 and positive >= 4.
    """
    model, vocab, artifact = load_model_file(model_path)
    fmt_data = data_format or _FORMAT_BY_MODEL[artifact.model_type]
    result = _load_training_data(data_path, fmt_data)
    seq_len = int(artifact.hyperparams.get("sequence_length",
                                           features.DEFAULT_SEQUENCE_LENGTH))
    run = _scorer(artifact.model_type, model, vocab, seq_len)

    if artifact.model_type == "ordinal":
        confusion = [[0] * 5 for _ in range(5)]
        correct = leaks = negatives = 0
        for example in result.examples:
            rating, _ = strict.rate(
                model, features.vectorize_tfidf(features.tokenize(example.text), vocab))
            confusion[example.label - 1][rating - 1] += 1
            correct += rating == example.label
            if example.label <= 2:
                negatives += 1
                leaks += rating >= 4
    else:
        confusion = [[0, 0], [0, 0]]
        correct = leaks = negatives = 0
        for example in result.examples:
            if example.label not in (0, 1):
                raise DataError("binary model needs 0/1 labels")
            _, label = run(example.text)
            confusion[example.label][label] += 1
            correct += label == example.label
            if example.label == 0:
                negatives += 1
                leaks += label == 1
    n = len(result.examples)
    metrics = {
        "n": n,
        "accuracy": correct / n,
        "false_positive_rate": leaks / negatives if negatives else 0.0,
        "leaks": leaks,
        "confusion": confusion,
    }
    if fmt == "json":
        click.echo(json.dumps(metrics))
    else:
        click.echo(f"n={n} accuracy={metrics['accuracy']:.4f} "
                   f"fpr={metrics['false_positive_rate']:.4f} leaks={leaks}")
        for row in confusion:
            click.echo("  " + " ".join(f"{cell:6d}" for cell in row))


@cli.command()
@click.argument("headline")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--data-dir", default=".", show_default=True,
              help="Store root for resolving model artifacts.")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]),
              default="text", show_default=True)
def rate(headline, config_path, data_dir, fmt):
    """Run one headline through every stage and show the verdict trail."""
    if not headline.strip():
        raise DataError("headline is empty")
    cfg = CascadeConfig.load(config_path)
    models = load_cascade_models(cfg, Store(data_dir))
    verdict = score_headline(headline, cfg, models)
    if fmt == "json":
        click.echo(json.dumps(verdict.to_dict()))
        return
    for entry in verdict.entries:
        flag = "pass" if entry.passed else "FAIL"
        click.echo(f"  {entry.stage:<10} {entry.score:.4f}  {flag}")
    final = "ACCEPTED" if verdict.accepted else verdict.final.upper()
    click.echo(final + (f" ({verdict.error})" if verdict.error else ""))


@cli.command(name="run-pipeline")
@click.option("--sources", "sources_path", required=True, type=click.Path())
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--date", "date_str", default=None, help="Feed date (default today).")
@click.option("--data-dir", default=".", show_default=True)
@click.option("--loop", is_flag=True,
              help="Keep running, one ingestion every 24 h.")
def run_pipeline(sources_path, config_path, date_str, data_dir, loop):
    """Fetch all sources, run the cascade, and publish the dated feed."""
    sources = ingest.load_sources(sources_path)
    cfg = CascadeConfig.load(config_path)
    store = Store(data_dir)
    models = load_cascade_models(cfg, store)
    for_date = date_type.fromisoformat(date_str) if date_str else None

    def one_run(run_date):
        window = ingest.DedupWindow.from_dict(store.load_dedup_window())
        report = ingest.run_daily(sources, window, cfg, models, store, for_date=run_date)
        click.echo(json.dumps(report))

    if not loop:
        one_run(for_date)
        return
    while True:  # pragma: no cover - exercised manually
        try:
            one_run(None)
        except UpliftError as exc:
            click.echo(f"run failed: {exc}", err=True)
        time.sleep(min(s.poll_interval for s in sources) if sources else 86_400.0)


@cli.command()
@click.option("--addr", default="127.0.0.1:8765", show_default=True)
@click.option("--data-dir", default=".", show_default=True)
@click.option("--config", "config_path", default=None, type=click.Path(),
              help="Cascade config; enables model checks in /healthz.")
@click.option("--cors-origin", "cors_origins", multiple=True,
              help="Allowed origin for the curation UI (repeatable).")
def serve(addr, data_dir, config_path, cors_origins):
    """Start the HTTP API."""
    import uvicorn

    from .server import ApiConfig, create_app

    host, _, port = addr.rpartition(":")
    app = create_app(ApiConfig(data_dir=data_dir, cascade_config_path=config_path,
                               cors_origins=list(cors_origins)))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


@cli.command(name="gen-corpus")
@click.option("--out-dir", default="data/bundled", show_default=True)
@click.option("--seed", default=SYNTH_SEED, show_default=True)
def gen_corpus(out_dir, seed):
    """Regenerate the bundled synthetic corpus."""
    counts = write_bundled_corpus(out_dir, seed)
    click.echo(json.dumps(counts))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except (IoError, SourceError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except (DataError, ConfigError, DegenerateData) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except UpliftError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
