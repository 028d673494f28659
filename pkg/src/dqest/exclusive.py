"""MDE for the exclusive ground-truth arrangement.

Here verified labels exist only for instances no worker decided: a separate
pool disjoint from every worker's records. EAR has nothing to measure in
this arrangement, and the usual bank would train purely on noisy decisions.
Instead, the pool is split into balanced random shares, one per worker, and
each share is added to that worker's training data with the verified label
as the training target. Synthetic workers are then built over the shared
pool as usual, with each pool entry's origin set to the share recipient so
leave-out inference still excludes the model that trained on it.

Workers are assessed on their own real records only; the share is training
augmentation, not decisions the worker made.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from dqest import rng as rngmod
from dqest.data import GroundTruthPool, WorkerDecisionSet
from dqest.dq import ENSEMBLE
from dqest.errors import ValidationError
from dqest.learners import ClassifierConfig
from dqest.mde import MdeConfig, MdeModel, assess_worker, fit_mde


def _augment_worker(
    worker: WorkerDecisionSet, pool: GroundTruthPool, share: np.ndarray
) -> WorkerDecisionSet:
    labels = pool.labels[share].astype(np.int8)
    return WorkerDecisionSet(
        worker_id=worker.worker_id,
        instance_ids=np.concatenate([worker.instance_ids, pool.instance_ids[share]]),
        features=np.concatenate([worker.features, pool.features[share]]),
        true_labels=np.concatenate([worker.true_labels, labels]),
        decisions=np.concatenate([worker.decisions, labels]),
        gt_known=np.concatenate(
            [worker.gt_known, np.ones(share.shape[0], dtype=bool)]
        ),
    )


def assign_shares(
    pool: GroundTruthPool,
    workers: list[WorkerDecisionSet],
    rng: np.random.Generator | int,
) -> list[np.ndarray]:
    """Randomly split pool indices into balanced shares, one per worker.

    Share sizes differ by at most one; every pool entry lands in exactly
    one share.
    """
    if len(pool) == 0:
        raise ValidationError("exclusive pool is empty")
    perm = rngmod.as_rng(rng).permutation(len(pool))
    return [np.sort(part) for part in np.array_split(perm, len(workers))]


def fit_mde_exclusive(
    workers: list[WorkerDecisionSet],
    pool: GroundTruthPool,
    mde_config: MdeConfig,
    classifier_config: ClassifierConfig,
    rng: np.random.Generator | int,
    mode: str = ENSEMBLE,
) -> MdeModel:
    """Fit the MDE model under the exclusive arrangement.

    Validates disjointness, assigns shares with `rng`, trains the bank on
    the augmented workers, and rewrites pool origins to the share
    recipients before the usual fitting.
    """
    if len(workers) < 2:
        raise ValidationError("exclusive MDE needs at least 2 workers")
    if not pool.exclusive:
        raise ValidationError("pool is not marked exclusive")
    pool_ids = set(pool.instance_ids.tolist())
    for w in workers:
        overlap = pool_ids.intersection(w.instance_ids.tolist())
        if overlap:
            raise ValidationError(
                f"worker {w.worker_id} decided instances that are in the "
                f"exclusive pool (e.g. {sorted(overlap)[:3]})"
            )

    shares = assign_shares(pool, workers, rng)
    augmented = [
        _augment_worker(w, pool, s) for w, s in zip(workers, shares)
    ]
    origins = np.full(len(pool), -1, dtype=np.int64)
    for w, s in zip(workers, shares):
        origins[s] = w.worker_id
    pool_with_origins = replace(pool, origins=origins)
    return fit_mde(augmented, pool_with_origins, mde_config, classifier_config, mode)


def mde_exclusive(
    workers: list[WorkerDecisionSet],
    pool: GroundTruthPool,
    mde_config: MdeConfig | None = None,
    classifier_config: ClassifierConfig | None = None,
    rng: np.random.Generator | int = 0,
    mode: str = ENSEMBLE,
) -> list[float]:
    """Per-worker accuracy estimates in the exclusive arrangement."""
    model = fit_mde_exclusive(
        workers,
        pool,
        mde_config or MdeConfig(),
        classifier_config or ClassifierConfig(),
        rng,
        mode,
    )
    return [assess_worker(model, w) for w in workers]
