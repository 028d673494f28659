"""Corpora, worker decision sets, and ground-truth bookkeeping.

Instances are stored column-wise in numpy arrays for speed; `Instance` and
`DecisionRecord` are lightweight row views for code that works one record at
a time. Worker record sets are exclusive by instance id: no two workers ever
decide the same instance.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, replace

import numpy as np

from dqest import rng as rngmod
from dqest.errors import DataFormatError, ValidationError

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class Instance:
    """One decision instance: feature vector plus its true binary label."""

    id: int
    features: np.ndarray
    true_label: int


@dataclass(frozen=True)
class DecisionRecord:
    """A worker's decision on one instance.

    When `gt_known` is set, the verified truth is `instance.true_label`.
    """

    instance: Instance
    decision: int
    gt_known: bool


@dataclass(frozen=True)
class Corpus:
    """A fixed collection of labeled instances."""

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray    # (n,) int8, values in {0, 1}
    ids: np.ndarray       # (n,) int64, unique

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def instance(self, row: int) -> Instance:
        return Instance(int(self.ids[row]), self.features[row], int(self.labels[row]))


@dataclass
class WorkerDecisionSet:
    """One worker's decision history plus ground-truth flags.

    `true_labels` may hold -1 where the truth is genuinely unknown (real
    decision logs without adjudication); every flagged record must carry a
    real label.
    """

    worker_id: int
    instance_ids: np.ndarray  # (n,) int64
    features: np.ndarray      # (n, d) float64
    true_labels: np.ndarray   # (n,) int8, {0, 1} or -1 when unknown
    decisions: np.ndarray     # (n,) int8, {0, 1}
    gt_known: np.ndarray      # (n,) bool

    @property
    def n(self) -> int:
        return int(self.instance_ids.shape[0])

    @property
    def t(self) -> int:
        return int(np.count_nonzero(self.gt_known))

    def record(self, row: int) -> DecisionRecord:
        inst = Instance(
            int(self.instance_ids[row]), self.features[row], int(self.true_labels[row])
        )
        return DecisionRecord(inst, int(self.decisions[row]), bool(self.gt_known[row]))

    def records(self) -> Iterator[DecisionRecord]:
        return (self.record(i) for i in range(self.n))


@dataclass(frozen=True)
class GroundTruthPool:
    """Pooled ground-truth entries with origin bookkeeping.

    `origins[i]` is the worker whose record set contributed entry i, or -1
    for entries outside every worker's history (the exclusive setting).
    """

    instance_ids: np.ndarray  # (m,) int64
    features: np.ndarray      # (m, d) float64
    labels: np.ndarray        # (m,) int8
    origins: np.ndarray       # (m,) int64, -1 = none
    exclusive: bool = False

    def __len__(self) -> int:
        return int(self.instance_ids.shape[0])


_as_rng = rngmod.as_rng


def build_pool(workers: Sequence[WorkerDecisionSet]) -> GroundTruthPool:
    """Assemble the shared ground-truth pool from workers' flagged records."""
    ids, feats, labels, origins = [], [], [], []
    for w in workers:
        mask = w.gt_known
        if not mask.any():
            continue
        if (w.true_labels[mask] < 0).any():
            raise ValidationError(
                f"worker {w.worker_id}: flagged record without a true label"
            )
        ids.append(w.instance_ids[mask])
        feats.append(w.features[mask])
        labels.append(w.true_labels[mask])
        origins.append(np.full(int(mask.sum()), w.worker_id, dtype=np.int64))
    if not ids:
        d = workers[0].features.shape[1] if workers else 0
        return GroundTruthPool(
            np.empty(0, dtype=np.int64),
            np.empty((0, d), dtype=np.float64),
            np.empty(0, dtype=np.int8),
            np.empty(0, dtype=np.int64),
        )
    return GroundTruthPool(
        np.concatenate(ids),
        np.concatenate(feats),
        np.concatenate(labels).astype(np.int8),
        np.concatenate(origins),
    )


def load_corpus(path: str, format: str = "csv", vocabulary_size: int = 2000) -> Corpus:
    """Load a corpus file.

    `format` is "csv" (header `f0..f{D-1},label`) or "text" (UTF-8 lines of
    `label<TAB>text`, vectorized via `build_bow`).
    """
    if format == "csv":
        return _load_csv_corpus(path)
    if format == "text":
        docs = _load_text_documents(path)
        return build_bow(docs, vocabulary_size)
    raise ValidationError(f"load_corpus: unknown format {format!r}")


def _load_csv_corpus(path: str) -> Corpus:
    with open(path, newline="", encoding="utf8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file, expected a header row") from None
        if len(header) < 2 or header[-1] != "label":
            raise DataFormatError(f"{path}: last header column must be 'label'")
        d = len(header) - 1
        expected = [f"f{i}" for i in range(d)]
        if header[:-1] != expected:
            raise DataFormatError(
                f"{path}: feature columns must be f0..f{d - 1} in order"
            )
        feats: list[list[float]] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise DataFormatError(
                    f"{path}:{lineno}: expected {d + 1} columns, got {len(row)}"
                )
            try:
                values = [float(v) for v in row[:-1]]
                lab = float(row[-1])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
            if lab not in (0.0, 1.0):
                raise ValidationError(
                    f"{path}:{lineno}: label must be 0 or 1, got {row[-1]!r}"
                )
            feats.append(values)
            labels.append(int(lab))
    n = len(feats)
    features = np.asarray(feats, dtype=np.float64).reshape(n, d)
    if n and not np.isfinite(features).all():
        raise ValidationError(f"{path}: non-finite feature value")
    return Corpus(
        features,
        np.asarray(labels, dtype=np.int8),
        np.arange(n, dtype=np.int64),
    )


def _load_text_documents(path: str) -> list[tuple[str, int]]:
    docs: list[tuple[str, int]] = []
    with open(path, encoding="utf8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            label_s, sep, text = line.partition("\t")
            if not sep:
                raise DataFormatError(f"{path}:{lineno}: expected label<TAB>text")
            if label_s not in ("0", "1"):
                raise ValidationError(
                    f"{path}:{lineno}: label must be 0 or 1, got {label_s!r}"
                )
            docs.append((text, int(label_s)))
    return docs


def build_bow(documents: Sequence[tuple[str, int]], vocabulary_size: int) -> Corpus:
    """Binary bag-of-words corpus over the most frequent tokens.

    Tokens are maximal lowercase alphanumeric runs. The vocabulary holds the
    `vocabulary_size` highest-count tokens, count ties broken lexicographically;
    feature columns follow that order. Features are presence indicators.
    """
    if vocabulary_size < 1:
        raise ValidationError("build_bow: vocabulary_size must be >= 1")
    if not documents:
        raise ValidationError("build_bow: empty document list")
    counts: dict[str, int] = {}
    tokenized: list[list[str]] = []
    labels: list[int] = []
    for text, label in documents:
        if label not in (0, 1):
            raise ValidationError(f"build_bow: label must be 0 or 1, got {label!r}")
        toks = _TOKEN_RE.findall(text.lower())
        tokenized.append(toks)
        labels.append(int(label))
        for tok in toks:
            counts[tok] = counts.get(tok, 0) + 1
    vocab = sorted(counts, key=lambda tok: (-counts[tok], tok))[:vocabulary_size]
    index = {tok: i for i, tok in enumerate(vocab)}
    features = np.zeros((len(documents), len(vocab)), dtype=np.float64)
    for row, toks in enumerate(tokenized):
        for tok in toks:
            col = index.get(tok)
            if col is not None:
                features[row, col] = 1.0
    return Corpus(
        features,
        np.asarray(labels, dtype=np.int8),
        np.arange(len(documents), dtype=np.int64),
    )


def partition_workers(
    corpus: Corpus, k: int, rng: np.random.Generator | int
) -> list[np.ndarray]:
    """Random partition of corpus rows into k equal, disjoint subsets.

    Each subset has exactly floor(n/k) rows; remainder rows are left
    unassigned so every worker gets the same load. Returns row-index arrays.
    """
    n = len(corpus)
    if k < 2:
        raise ValidationError(f"partition_workers: k must be >= 2, got {k}")
    if k > n:
        raise ValidationError(f"partition_workers: k={k} exceeds corpus size {n}")
    r = _as_rng(rng)
    perm = r.permutation(n)
    size = n // k
    return [perm[i * size : (i + 1) * size].astype(np.int64) for i in range(k)]


def sample_ground_truth(
    worker: WorkerDecisionSet, t: int, rng: np.random.Generator | int
) -> WorkerDecisionSet:
    """Return a copy of the worker with exactly t records flagged as GT.

    The t records are drawn uniformly without replacement; any previous flags
    are discarded. Decisions are untouched (flags mark verification, they do
    not correct the decision).
    """
    if not 1 <= t <= worker.n:
        raise ValidationError(
            f"sample_ground_truth: t={t} outside [1, {worker.n}] for worker "
            f"{worker.worker_id}"
        )
    r = _as_rng(rng)
    chosen = r.choice(worker.n, size=t, replace=False)
    mask = np.zeros(worker.n, dtype=bool)
    mask[chosen] = True
    if (worker.true_labels[mask] < 0).any():
        raise ValidationError(
            f"sample_ground_truth: worker {worker.worker_id} lacks true labels "
            "for sampled records"
        )
    return replace(worker, gt_known=mask)


def percentile_threshold(corpus: Corpus, feature_index: int, percentile: float) -> float:
    """Nearest-rank empirical quantile of one feature.

    Instances with value strictly greater than the returned threshold form
    the "hard" region; for a constant feature that region is empty (warned).
    """
    if not 0.0 < percentile < 1.0:
        raise ValidationError(
            f"percentile_threshold: percentile must be in (0, 1), got {percentile}"
        )
    if not 0 <= feature_index < corpus.n_features:
        raise ValidationError(
            f"percentile_threshold: feature index {feature_index} out of range"
        )
    values = np.sort(corpus.features[:, feature_index])
    if values[0] == values[-1]:
        log.warning(
            "percentile_threshold: feature %d is constant; hard region is empty",
            feature_index,
        )
    rank = math.ceil(percentile * values.shape[0])
    return float(values[rank - 1])
