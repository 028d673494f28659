"""Shared builders for the test suite.

Everything here is deterministic given the generator passed in, so tests
stay reproducible without any global seeding.
"""

from __future__ import annotations

import numpy as np

from dqest.data import GroundTruthPool, WorkerDecisionSet


def make_cohort(rng, accuracies=(0.7, 0.8, 0.9), n=24, d=4, t=0, concept=None):
    """Build a small cohort of workers with a shared linear concept.

    Each worker gets ``n`` records with disjoint instance ids, decisions
    flipped independently at rate ``1 - accuracy``, and ``t`` ground-truth
    flags sampled without replacement.
    """
    k = len(accuracies)
    if concept is None:
        concept = rng.normal(size=d)
    workers = []
    for j in range(k):
        feats = rng.normal(size=(n, d))
        truth = (feats @ concept > 0.0).astype(np.int8)
        keep = rng.random(n) < accuracies[j]
        decisions = np.where(keep, truth, 1 - truth).astype(np.int8)
        flags = np.zeros(n, dtype=bool)
        if t:
            flags[rng.choice(n, size=t, replace=False)] = True
        workers.append(
            WorkerDecisionSet(
                worker_id=j,
                instance_ids=np.arange(j * n, (j + 1) * n, dtype=np.int64),
                features=feats,
                true_labels=truth,
                decisions=decisions,
                gt_known=flags,
            )
        )
    return workers


def make_exclusive_pool(rng, size=12, d=4, id_start=10_000, concept=None):
    """Build a held-out pool that shares no ids with make_cohort output."""
    if concept is None:
        concept = rng.normal(size=d)
    feats = rng.normal(size=(size, d))
    labels = (feats @ concept > 0.0).astype(np.int8)
    return GroundTruthPool(
        instance_ids=np.arange(id_start, id_start + size, dtype=np.int64),
        features=feats,
        labels=labels,
        origins=np.full(size, -1, dtype=np.int64),
        exclusive=True,
    )


def spearman(a, b):
    """Spearman rank correlation, average ranks for ties."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ra = _rank(a)
    rb = _rank(b)
    ra = ra - ra.mean()
    rb = rb - rb.mean()
    denom = np.sqrt((ra * ra).sum() * (rb * rb).sum())
    if denom == 0.0:
        return 0.0
    return float((ra * rb).sum() / denom)


def _rank(values):
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    ranks[order] = np.arange(1, len(values) + 1, dtype=np.float64)
    # average tied groups
    for v in np.unique(values):
        mask = values == v
        if mask.sum() > 1:
            ranks[mask] = ranks[mask].mean()
    return ranks
