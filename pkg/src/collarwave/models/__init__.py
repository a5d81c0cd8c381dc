"""Classifier training, prediction and artifact persistence.

All five kinds are binary learners over a 0/1 target. The default task is
``positive_label`` versus everything else; ``task="multiclass"`` trains one
binary model per class (one-vs-rest) and predicts the best-scoring class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .. import __version__
from ..errors import CorruptArtifact, NonFiniteInput, SchemaMismatch, SingleClassDataset, TooFewRows, VersionMismatch
from ..features import Dataset, FeatureSchema, NormalizationStats, normalize_rows
from ..preprocess import NEGATIVE, SPIN
from . import forest, knn, logreg, naive_bayes, svm

FORMAT = "collarwave-model"
FORMAT_VERSION = 1
MIN_TRAIN_ROWS = 10

KINDS = {
    "naive_bayes": naive_bayes,
    "logreg": logreg,
    "knn": knn,
    "random_forest": forest,
    "svm_linear": svm,
}
ALIASES = {"nb": "naive_bayes", "rf": "random_forest", "svm": "svm_linear", "lr": "logreg"}


def canonical_kind(kind: str) -> str:
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    return kind


@dataclass(frozen=True)
class TrainConfig:
    model_kind: str = "naive_bayes"
    seed: int = 0
    hyperparameters: dict = field(default_factory=dict)
    positive_label: str = SPIN
    task: str = "binary"
    class_weight: str | None = None  # None or "balanced"

    def __post_init__(self) -> None:
        object.__setattr__(self, "model_kind", canonical_kind(self.model_kind))
        if self.task not in ("binary", "multiclass"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.class_weight not in (None, "balanced"):
            raise ValueError(f"unknown class_weight {self.class_weight!r}")
        unknown = set(self.hyperparameters) - set(KINDS[self.model_kind].DEFAULTS)
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.model_kind}: {sorted(unknown)}")

    @property
    def effective_hyperparameters(self) -> dict:
        return {**KINDS[self.model_kind].DEFAULTS, **self.hyperparameters}

    def as_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "seed": self.seed,
            "hyperparameters": self.effective_hyperparameters,
            "positive_label": self.positive_label,
            "task": self.task,
            "class_weight": self.class_weight,
        }


@dataclass(frozen=True, eq=False)
class ModelArtifact:
    kind: str
    params: dict
    schema_hash: str
    n_features: int
    normalization: NormalizationStats | None
    positive_label: str
    classes: tuple[str, ...]
    meta: dict


class FeatureVector(NamedTuple):
    values: np.ndarray
    schema_hash: str


class Prediction(NamedTuple):
    label: str
    score: float


def task_labels(labels, cfg: TrainConfig) -> np.ndarray:
    labels = np.asarray(labels, dtype=object)
    if cfg.task == "binary":
        return np.where(labels == cfg.positive_label, cfg.positive_label, NEGATIVE).astype(object)
    return labels


def _fit_binary(module, X, y01, cfg: TrainConfig) -> dict:
    hp = cfg.effective_hyperparameters
    balanced = cfg.class_weight == "balanced"
    if module is naive_bayes:
        return module.fit(X, y01, hp, cfg.seed, balanced=balanced)
    if module in (logreg, svm):
        sw = None
        if balanced:
            counts = np.bincount(y01, minlength=2)
            sw = len(y01) / (2.0 * counts[y01])
        return module.fit(X, y01, hp, cfg.seed, sample_weight=sw)
    return module.fit(X, y01, hp, cfg.seed)


def train(ds: Dataset, cfg: TrainConfig, normalization: NormalizationStats | None = None) -> ModelArtifact:
    """Fit a classifier on an already-normalised dataset.

    ``normalization`` is the transform that produced ``ds`` from raw features;
    it is stored so raw vectors can be scored later.
    """
    if len(ds) < MIN_TRAIN_ROWS:
        raise TooFewRows(f"training needs at least {MIN_TRAIN_ROWS} rows, got {len(ds)}")
    if not np.all(np.isfinite(ds.X)):
        raise NonFiniteInput("training matrix contains non-finite values")
    if normalization is not None and len(normalization.mean) != len(ds.schema):
        raise SchemaMismatch("normalization width differs from the schema")
    labels = task_labels(ds.labels, cfg)
    present = sorted(set(labels))
    if len(present) < 2:
        raise SingleClassDataset(f"only class {present} present")
    module = KINDS[cfg.model_kind]

    if cfg.task == "binary":
        if cfg.positive_label not in present:
            raise SingleClassDataset(f"positive label {cfg.positive_label!r} absent")
        classes = (cfg.positive_label, NEGATIVE)
        y01 = (labels == cfg.positive_label).astype(np.int64)
        params = _fit_binary(module, ds.X, y01, cfg)
    else:
        classes = tuple(present)
        params = {
            "one_vs_rest": [_fit_binary(module, ds.X, (labels == c).astype(np.int64), cfg) for c in classes]
        }

    meta = {
        "config": cfg.as_dict(),
        "dataset_fingerprint": ds.fingerprint(),
        "n_rows": len(ds),
        "schema": list(ds.schema.names),
        "collarwave_version": __version__,
    }
    return ModelArtifact(cfg.model_kind, params, ds.schema.hash, len(ds.schema), normalization,
                         cfg.positive_label, classes, meta)


def predict_scores(m: ModelArtifact, X: np.ndarray) -> np.ndarray:
    """Per-class scores, shape (n, len(m.classes)); binary rows are [pos, 1 - pos]."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != m.n_features:
        raise SchemaMismatch(f"expected {m.n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("feature vector contains non-finite values")
    module = KINDS[m.kind]
    if "one_vs_rest" in m.params:
        return np.column_stack([module.score(p, X) for p in m.params["one_vs_rest"]])
    pos = module.score(m.params, X)
    return np.column_stack([pos, 1.0 - pos])


def _decide(m: ModelArtifact, scores: np.ndarray) -> list[Prediction]:
    out = []
    if len(m.classes) == 2 and m.classes[1] == NEGATIVE:
        # ties go to the positive class: a missed signal costs more than a false alert
        for s in scores[:, 0]:
            out.append(Prediction(m.classes[0] if s >= 0.5 else NEGATIVE, float(s)))
        return out
    pos_col = m.classes.index(m.positive_label) if m.positive_label in m.classes else None
    for row in scores:
        label = m.classes[int(np.argmax(row))]
        out.append(Prediction(label, float(row[pos_col]) if pos_col is not None else 0.0))
    return out


def predict_many(m: ModelArtifact, X: np.ndarray) -> list[Prediction]:
    return _decide(m, predict_scores(m, X))


def predict(m: ModelArtifact, v) -> Prediction:
    """Classify one normalised feature vector (array or :class:`FeatureVector`)."""
    if isinstance(v, FeatureVector):
        if v.schema_hash != m.schema_hash:
            raise SchemaMismatch(f"vector schema {v.schema_hash} != model schema {m.schema_hash}")
        v = v.values
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise SchemaMismatch("predict takes a single vector")
    return predict_many(m, v[None, :])[0]


def normalize_for(m: ModelArtifact, X: np.ndarray) -> np.ndarray:
    if m.normalization is None:
        return np.asarray(X, dtype=np.float64)
    return normalize_rows(X, m.normalization)


def predict_raw(m: ModelArtifact, v) -> Prediction:
    """Classify a raw (unnormalised) feature vector using the stored normalizer."""
    if isinstance(v, FeatureVector):
        return predict(m, FeatureVector(normalize_for(m, v.values), v.schema_hash))
    return predict(m, normalize_for(m, v))


def predict_dataset(m: ModelArtifact, ds: Dataset, normalized: bool = False) -> list[Prediction]:
    if ds.schema.hash != m.schema_hash:
        raise SchemaMismatch(f"dataset schema {ds.schema.hash} != model schema {m.schema_hash}")
    X = ds.X if normalized else normalize_for(m, ds.X)
    return predict_many(m, X)


def feature_schema(m: ModelArtifact) -> FeatureSchema:
    return FeatureSchema(tuple(m.meta["schema"]))


# ---------------------------------------------------------------------------
# persistence


def _encode(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return {"dtype": obj.dtype.str, "shape": list(obj.shape), "data": obj.ravel().tolist()}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj: Any) -> Any:
    if isinstance(obj, dict):
        if set(obj) == {"dtype", "shape", "data"}:
            return np.array(obj["data"], dtype=np.dtype(obj["dtype"])).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def save_model(m: ModelArtifact) -> bytes:
    doc = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "kind": m.kind,
        "schema_hash": m.schema_hash,
        "n_features": m.n_features,
        "positive_label": m.positive_label,
        "classes": list(m.classes),
        "normalization": None
        if m.normalization is None
        else _encode({"mean": m.normalization.mean, "std": m.normalization.std}),
        "params": _encode(m.params),
        "meta": _encode(m.meta),
    }
    # float repr is the shortest string that reads back to the identical double
    return (json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n").encode()


def load_model(data: bytes) -> ModelArtifact:
    try:
        doc = json.loads(data)
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptArtifact(f"not a JSON document: {e}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CorruptArtifact("not a collarwave model")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {doc.get('version')!r}, expected {FORMAT_VERSION}")
    try:
        norm = doc["normalization"]
        if norm is not None:
            norm = _decode(norm)
            norm = NormalizationStats(norm["mean"], norm["std"])
        kind = canonical_kind(doc["kind"])
        return ModelArtifact(
            kind,
            _decode(doc["params"]),
            str(doc["schema_hash"]),
            int(doc["n_features"]),
            norm,
            str(doc["positive_label"]),
            tuple(doc["classes"]),
            _decode(doc["meta"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptArtifact(f"missing or malformed field: {e}") from None


from .cv import CVReport, cross_validate, leave_one_out, stratified_folds  # noqa: E402

__all__ = [
    "CVReport", "FeatureVector", "ModelArtifact", "Prediction", "TrainConfig", "cross_validate",
    "leave_one_out", "load_model", "predict", "predict_dataset", "predict_many", "predict_raw",
    "save_model", "stratified_folds", "train",
]
