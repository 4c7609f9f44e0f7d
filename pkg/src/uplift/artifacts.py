"""Versioned model artifact format shared by all four stage types.

Arrays are stored row-major as base64 of little-endian 64-bit floats, so
save/load round-trips are bit-exact and predictions identical.
"""

from __future__ import annotations

import base64
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import CorruptArtifact, UnsupportedVersion
from .lstm import LstmParams
from .mlp import IDENTITY, RELU, SIGMOID, DenseLayer, MlpModel
from .strict import OrdinalModel
from .svm import SvmModel

FORMAT_VERSION = 1
MODEL_TYPES = ("mlp", "lstm", "svm", "ordinal")


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH makes artifact bytes reproducible across runs.
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        dt = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        dt = datetime.now(timezone.utc)
    return dt.replace(microsecond=0).isoformat()


@dataclass
class ModelArtifact:
    model_type: str
    hyperparams: dict
    arrays: dict[str, np.ndarray]
    vocab_ref: str = ""
    created_at: str = field(default_factory=_timestamp)
    format_version: int = FORMAT_VERSION
    # Where the artifact was loaded from, for resolving relative vocab refs.
    source_path: object = field(default=None, compare=False, repr=False)

    def to_json(self) -> str:
        payload = {
            "format_version": self.format_version,
            "model_type": self.model_type,
            "hyperparams": self.hyperparams,
            "arrays": [
                {
                    "name": name,
                    "shape": list(arr.shape),
                    "data": base64.b64encode(
                        np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii"),
                }
                for name, arr in self.arrays.items()
            ],
            "vocab_ref": self.vocab_ref,
            "created_at": self.created_at,
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, raw: str) -> "ModelArtifact":
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorruptArtifact(f"artifact is not valid JSON: {exc}") from exc
        version = obj.get("format_version")
        if version != FORMAT_VERSION:
            raise UnsupportedVersion(f"artifact format_version {version!r} unsupported")
        if obj.get("model_type") not in MODEL_TYPES:
            raise CorruptArtifact(f"unknown model_type: {obj.get('model_type')!r}")
        arrays = {}
        for spec in obj.get("arrays", []):
            try:
                shape = tuple(int(n) for n in spec["shape"])
                raw_bytes = base64.b64decode(spec["data"])
                values = np.frombuffer(raw_bytes, dtype="<f8")
            except (KeyError, TypeError, ValueError) as exc:
                raise CorruptArtifact(f"malformed array entry: {exc}") from exc
            if len(values) != math.prod(shape):
                raise CorruptArtifact(
                    f"array {spec.get('name')!r}: {len(values)} values for shape {shape}")
            arrays[spec["name"]] = values.reshape(shape).astype(np.float64)
        return cls(
            model_type=obj["model_type"],
            hyperparams=obj.get("hyperparams", {}),
            arrays=arrays,
            vocab_ref=obj.get("vocab_ref", ""),
            created_at=obj.get("created_at", ""),
        )


def pack_mlp(model: MlpModel, vocab_ref: str) -> ModelArtifact:
    arrays = {}
    activations = []
    for k, layer in enumerate(model.layers):
        arrays[f"W{k}"] = layer.W
        arrays[f"b{k}"] = layer.b
        activations.append(layer.activation)
    return ModelArtifact(
        model_type="mlp",
        hyperparams={"input_dim": model.input_dim, "activations": activations},
        arrays=arrays,
        vocab_ref=vocab_ref,
    )


def pack_lstm(params: LstmParams, vocab_ref: str, sequence_length: int) -> ModelArtifact:
    names = ("E", "W_i", "b_i", "W_f", "b_f", "W_g", "b_g", "W_o", "b_o",
             "W1", "b1", "W2", "b2")
    return ModelArtifact(
        model_type="lstm",
        hyperparams={"dropout_rate": params.dropout_rate,
                     "sequence_length": sequence_length},
        arrays={name: getattr(params, name) for name in names},
        vocab_ref=vocab_ref,
    )


def pack_svm(model: SvmModel, vocab_ref: str) -> ModelArtifact:
    return ModelArtifact(
        model_type="svm",
        hyperparams={"lambda": model.lam, "epochs_trained": model.epochs_trained},
        arrays={"w": model.w},
        vocab_ref=vocab_ref,
    )


def pack_ordinal(model: OrdinalModel, vocab_ref: str) -> ModelArtifact:
    return ModelArtifact(
        model_type="ordinal",
        hyperparams={},
        arrays={"W": model.W, "b": model.b},
        vocab_ref=vocab_ref,
    )


def unpack_model(artifact: ModelArtifact):
    """Rebuild the typed model from an artifact; shapes are re-validated."""
    try:
        if artifact.model_type == "mlp":
            activations = artifact.hyperparams["activations"]
            layers = []
            for k, activation in enumerate(activations):
                if activation not in (RELU, SIGMOID, IDENTITY):
                    raise CorruptArtifact(f"unknown activation: {activation!r}")
                layers.append(DenseLayer(W=artifact.arrays[f"W{k}"],
                                         b=artifact.arrays[f"b{k}"],
                                         activation=activation))
            return MlpModel(layers=layers, input_dim=int(artifact.hyperparams["input_dim"]))
        if artifact.model_type == "lstm":
            return LstmParams(
                E=artifact.arrays["E"],
                W_i=artifact.arrays["W_i"], b_i=artifact.arrays["b_i"],
                W_f=artifact.arrays["W_f"], b_f=artifact.arrays["b_f"],
                W_g=artifact.arrays["W_g"], b_g=artifact.arrays["b_g"],
                W_o=artifact.arrays["W_o"], b_o=artifact.arrays["b_o"],
                W1=artifact.arrays["W1"], b1=artifact.arrays["b1"],
                W2=artifact.arrays["W2"], b2=artifact.arrays["b2"],
                dropout_rate=float(artifact.hyperparams.get("dropout_rate", 0.5)),
            )
        if artifact.model_type == "svm":
            return SvmModel(w=artifact.arrays["w"],
                            lam=float(artifact.hyperparams.get("lambda", 1e-4)),
                            epochs_trained=int(artifact.hyperparams.get("epochs_trained", 0)))
        if artifact.model_type == "ordinal":
            return OrdinalModel(W=artifact.arrays["W"], b=artifact.arrays["b"])
    except KeyError as exc:
        raise CorruptArtifact(f"artifact missing array or hyperparam: {exc}") from exc
    raise CorruptArtifact(f"unknown model_type: {artifact.model_type!r}")
