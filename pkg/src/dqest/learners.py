"""Probability-estimating classifiers and the linear DQ-to-accuracy map.

Two classifier families, both trained fully in-repo:

* random forest: bootstrap of size m per tree, ceil(sqrt(D)) candidate
  features per split, Gini impurity, grown to purity subject to the minimum
  leaf size, Laplace-smoothed leaf class frequencies (c + 1)/(m + 2);
* LogitBoost: additive logistic regression with depth-1 regression stumps.

Split ties are broken by lowest feature index, then lowest threshold, so
training is deterministic given (seed, data order). The hot loops live in
the kernel backend (compiled when available).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from dqest import _backend
from dqest.errors import ValidationError

FOREST = "forest"
LOGITBOOST = "logitboost"
_CONSTANT = "constant"

_PROB_EPS = 1e-9
_Z_MAX = 4.0
_W_MIN = 1e-10


@dataclass(frozen=True)
class ClassifierConfig:
    """Hyperparameters for `train_classifier`.

    `max_depth` of None grows trees to purity (subject to `min_leaf_size`).
    `boosting_rounds` applies to LOGITBOOST only, tree parameters to FOREST.
    """

    algorithm: str = FOREST
    tree_count: int = 100
    max_depth: int | None = None
    min_leaf_size: int = 1
    boosting_rounds: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.algorithm not in (FOREST, LOGITBOOST):
            raise ValidationError(
                f"ClassifierConfig: unknown algorithm {self.algorithm!r}"
            )
        if self.tree_count < 1:
            raise ValidationError("ClassifierConfig: tree_count must be >= 1")
        if self.boosting_rounds < 1:
            raise ValidationError("ClassifierConfig: boosting_rounds must be >= 1")
        if self.min_leaf_size < 1:
            raise ValidationError("ClassifierConfig: min_leaf_size must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValidationError("ClassifierConfig: max_depth must be >= 1 or None")


@dataclass(frozen=True)
class TrainedClassifier:
    """Fitted binary classifier; two classes, probabilities strictly in (0,1)."""

    kind: str
    feature_dim: int
    model: tuple = field(repr=False)


@dataclass(frozen=True)
class LinearMap:
    """y = slope * x + intercept."""

    slope: float
    intercept: float


def _coerce_data(
    data: Iterable[tuple[np.ndarray, int]] | tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, tuple) and len(data) == 2 and hasattr(data[0], "ndim"):
        X = np.asarray(data[0], dtype=np.float64)
        y = np.asarray(data[1])
    else:
        pairs = list(data)
        if not pairs:
            raise ValidationError("train_classifier: empty training data")
        X = np.asarray([np.asarray(f, dtype=np.float64) for f, _ in pairs])
        y = np.asarray([lab for _, lab in pairs])
    if X.ndim != 2:
        raise ValidationError(
            "train_classifier: inconsistent feature dimensions in training data"
        )
    if X.shape[0] == 0:
        raise ValidationError("train_classifier: empty training data")
    if not np.isfinite(X).all():
        raise ValidationError("train_classifier: non-finite feature value")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("train_classifier: labels must be 0 or 1")
    return np.ascontiguousarray(X), y.astype(np.int8)


def train_classifier(
    config: ClassifierConfig,
    data: Iterable[tuple[np.ndarray, int]] | tuple[np.ndarray, np.ndarray],
) -> TrainedClassifier:
    """Train a classifier on (features, label) pairs (or an (X, y) tuple).

    Deterministic given (config.seed, data order). Single-class data yields
    a constant predictor at the Laplace-smoothed maximum for that class.
    """
    X, y = _coerce_data(data)
    m, d = X.shape
    c1 = int(y.sum())
    if c1 == 0 or c1 == m:
        p1 = (c1 + 1.0) / (m + 2.0)
        return TrainedClassifier(_CONSTANT, d, (p1,))
    if config.algorithm == FOREST:
        mtry = int(np.ceil(np.sqrt(d)))
        depth = 0 if config.max_depth is None else config.max_depth
        arrays = _backend.forest_fit(
            X, y, config.tree_count, depth, config.min_leaf_size, mtry,
            int(config.seed) & 0xFFFFFFFFFFFFFFFF,
        )
        return TrainedClassifier(FOREST, d, arrays)
    return TrainedClassifier(LOGITBOOST, d, _fit_logitboost(X, y, config.boosting_rounds))


def _fit_logitboost(
    X: np.ndarray, y: np.ndarray, rounds: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    m, d = X.shape
    order = np.argsort(X, axis=0, kind="stable").T.astype(np.int32)
    xs = np.ascontiguousarray(np.take_along_axis(X.T, order.astype(np.int64), axis=1))
    order = np.ascontiguousarray(order)
    yv = y.astype(np.float64)
    F = np.zeros(m, dtype=np.float64)
    feats = np.empty(rounds, dtype=np.int32)
    thrs = np.empty(rounds, dtype=np.float64)
    cls = np.empty(rounds, dtype=np.float64)
    crs = np.empty(rounds, dtype=np.float64)
    for r in range(rounds):
        p = 1.0 / (1.0 + np.exp(-F))
        w = np.clip(p * (1.0 - p), _W_MIN, None)
        z = np.clip((yv - p) / w, -_Z_MAX, _Z_MAX)
        # totals via cumsum so both kernel backends see identical rounding
        w_tot = float(np.cumsum(w)[-1])
        wz_tot = float(np.cumsum(w * z)[-1])
        f, thr, cl, cr = _backend.stump_scan(xs, order, w, z, w_tot, wz_tot)
        if f < 0:
            c = wz_tot / w_tot
            feats[r], thrs[r], cls[r], crs[r] = -1, 0.0, c, c
            F = F + c
        else:
            feats[r], thrs[r], cls[r], crs[r] = f, thr, cl, cr
            F = F + np.where(X[:, f] <= thr, cl, cr)
    return feats, thrs, cls, crs


def predict_p1(model: TrainedClassifier, X: np.ndarray) -> np.ndarray:
    """Class-1 probability for each row of X (vectorized fast path)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_dim:
        raise ValidationError(
            f"predict: expected shape (n, {model.feature_dim}), got {X.shape}"
        )
    if model.kind == _CONSTANT:
        return np.full(X.shape[0], model.model[0], dtype=np.float64)
    if model.kind == FOREST:
        return _backend.forest_predict(*model.model, np.ascontiguousarray(X))
    feats, thrs, cls, crs = model.model
    F = np.zeros(X.shape[0], dtype=np.float64)
    for r in range(feats.shape[0]):
        f = int(feats[r])
        if f < 0:
            F = F + cls[r]
        else:
            F = F + np.where(X[:, f] <= thrs[r], cls[r], crs[r])
    p1 = 1.0 / (1.0 + np.exp(-F))
    return np.clip(p1, _PROB_EPS, 1.0 - _PROB_EPS)


def predict_proba(model: TrainedClassifier, features: np.ndarray) -> tuple[float, float]:
    """(p0, p1) for a single feature vector; p0 + p1 == 1."""
    vec = np.asarray(features, dtype=np.float64)
    if vec.ndim != 1:
        raise ValidationError("predict_proba: expected a single feature vector")
    p1 = float(predict_p1(model, vec.reshape(1, -1))[0])
    return 1.0 - p1, p1


def fit_linear(pairs: Sequence[tuple[float, float]]) -> LinearMap:
    """Ordinary least squares fit of y on x."""
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValidationError("fit_linear: need at least 2 (x, y) pairs")
    x = arr[:, 0]
    y = arr[:, 1]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValidationError("fit_linear: all x values identical (degenerate fit)")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    if not (np.isfinite(slope) and np.isfinite(intercept)):
        raise ValidationError("fit_linear: non-finite coefficients")
    return LinearMap(slope, intercept)


def apply_linear(map: LinearMap, x: float) -> float:
    """slope * x + intercept, untruncated."""
    return map.slope * x + map.intercept


def classifier_to_json(model: TrainedClassifier) -> str:
    """Serialize a trained classifier to a versioned JSON blob."""
    payload = [np.asarray(a).tolist() for a in model.model]
    return json.dumps(
        {
            "version": 1,
            "kind": model.kind,
            "feature_dim": model.feature_dim,
            "model": payload,
        }
    )


def classifier_from_json(blob: str) -> TrainedClassifier:
    """Inverse of `classifier_to_json`."""
    obj = json.loads(blob)
    if obj.get("version") != 1:
        raise ValidationError(f"classifier_from_json: unsupported version {obj.get('version')}")
    kind = obj["kind"]
    raw = obj["model"]
    if kind == _CONSTANT:
        model: tuple = (float(raw[0]),)
    elif kind == FOREST:
        dtypes = [np.int32, np.float64, np.int32, np.int32, np.float64, np.int64]
        model = tuple(np.asarray(a, dtype=t) for a, t in zip(raw, dtypes))
    elif kind == LOGITBOOST:
        dtypes = [np.int32, np.float64, np.float64, np.float64]
        model = tuple(np.asarray(a, dtype=t) for a, t in zip(raw, dtypes))
    else:
        raise ValidationError(f"classifier_from_json: unknown kind {kind!r}")
    return TrainedClassifier(kind, int(obj["feature_dim"]), model)
