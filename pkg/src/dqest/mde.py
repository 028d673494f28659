"""Model-based decision-accuracy estimation (MDE).

Synthetic workers are controlled copies of the ground-truth pool: exactly
round(|pool| * (1 - q)) labels are inverted so the worker's realized accuracy
is q. Their DQ scores, paired with the known q values over a grid, fit C
linear DQ-to-accuracy mappings; a real worker's estimate is the truncated
average of the C mapped values of their own DQ score.

Synthetic records inherit the pool entry's origin worker, so the leave-out
rule treats synthetic and real evaluation identically.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from dqest import rng as rngmod
from dqest.data import GroundTruthPool, Instance, WorkerDecisionSet
from dqest.dq import (
    ENSEMBLE,
    BaseModelBank,
    bank_predict_matrix,
    dq_from_inference,
    leave_out_labels,
    train_bank,
)
from dqest.errors import ValidationError
from dqest.learners import (
    ClassifierConfig,
    LinearMap,
    apply_linear,
    fit_linear,
)


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero (x >= 0 here)."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class MdeConfig:
    """Synthetic-worker grid: c replicates of n workers at accuracies
    q_max, q_max - intv, ..., down to n values (never below q_min)."""

    c: int = 10
    n: int = 101
    intv: float = 0.005
    q_min: float = 0.5
    q_max: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.c < 1:
            raise ValidationError("MdeConfig: c must be >= 1")
        if self.n < 2:
            raise ValidationError("MdeConfig: n must be >= 2")
        if self.intv <= 0:
            raise ValidationError("MdeConfig: intv must be positive")
        lowest = self.q_max - (self.n - 1) * self.intv
        if lowest < self.q_min - 1e-9:
            raise ValidationError(
                f"MdeConfig: grid bottom {lowest:.4f} falls below q_min {self.q_min}"
            )

    def grid(self) -> np.ndarray:
        """Target accuracies, descending from q_max."""
        return self.q_max - self.intv * np.arange(self.n, dtype=np.float64)


@dataclass(frozen=True)
class SyntheticWorker:
    """A pool copy with a controlled fraction of decisions inverted."""

    pool: GroundTruthPool = field(repr=False)
    decisions: np.ndarray = field(repr=False)
    target_accuracy: float = 0.0

    def records(self) -> list[tuple[Instance, int, int | None]]:
        out = []
        for i in range(len(self.pool)):
            inst = Instance(
                int(self.pool.instance_ids[i]),
                self.pool.features[i],
                int(self.pool.labels[i]),
            )
            o = int(self.pool.origins[i])
            out.append((inst, int(self.decisions[i]), o if o >= 0 else None))
        return out

    @property
    def measured_accuracy(self) -> float:
        return float(np.mean(self.decisions == self.pool.labels))


def make_synthetic_worker(
    pool: GroundTruthPool, q: float, rng: np.random.Generator | int
) -> SyntheticWorker:
    """Build a synthetic worker with accuracy q over the whole pool.

    Exactly round(|pool| * (1 - q)) entries, chosen uniformly without
    replacement, get the inverted label; the rest keep the true label.
    """
    if not 0.5 <= q <= 1.0:
        raise ValidationError(f"make_synthetic_worker: q={q} outside [0.5, 1]")
    m = len(pool)
    if m == 0:
        raise ValidationError("make_synthetic_worker: empty pool")
    r = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    flips = round_half_away(m * (1.0 - q))
    decisions = pool.labels.copy()
    if flips:
        idx = r.choice(m, size=flips, replace=False)
        decisions[idx] = 1 - decisions[idx]
    return SyntheticWorker(pool, decisions, q)


@dataclass(frozen=True)
class MdeModel:
    """Fitted bank plus the C linear DQ-to-accuracy mappings."""

    bank: BaseModelBank = field(repr=False)
    mappings: tuple[LinearMap, ...] = ()
    mde_config: MdeConfig = MdeConfig()
    classifier_config: ClassifierConfig = ClassifierConfig()


def pool_inference(
    bank: BaseModelBank, pool: GroundTruthPool
) -> tuple[np.ndarray, np.ndarray]:
    """Leave-out inferred (labels, confidences) for every pool entry."""
    P = bank_predict_matrix(bank, pool.features)
    return leave_out_labels(bank, P, pool.origins)


def fit_mde(
    workers: Sequence[WorkerDecisionSet],
    pool: GroundTruthPool,
    mde_config: MdeConfig,
    classifier_config: ClassifierConfig,
    mode: str = ENSEMBLE,
) -> MdeModel:
    """Train the bank and fit the C DQ-to-accuracy mappings.

    Each replicate re-draws every synthetic worker's flip set from its own
    derived seed and fits one least-squares line through the n (DQ, q)
    points. `mode` selects the ensemble or one of the single-model ablation
    inferences (GLOBAL_ALL, GLOBAL_GT).
    """
    if len(pool) == 0:
        raise ValidationError("fit_mde: empty ground-truth pool")
    bank = train_bank(workers, classifier_config, mode)
    labels, confs = pool_inference(bank, pool)
    grid = mde_config.grid()
    mappings = []
    for c in range(mde_config.c):
        r = rngmod.spawn(mde_config.seed, "mde-replicate", c)
        pairs = []
        for q in grid:
            sw = make_synthetic_worker(pool, float(q), r)
            pairs.append((dq_from_inference(sw.decisions, labels, confs), float(q)))
        mappings.append(fit_linear(pairs))
    return MdeModel(bank, tuple(mappings), mde_config, classifier_config)


def worker_dq(model: MdeModel, worker: WorkerDecisionSet) -> float:
    """The worker's DQ score under the model's bank.

    Scores the recorded noisy decisions (ground-truth substitution applies
    to base-model training only) and excludes the worker's own model on
    every instance.
    """
    if worker.n == 0:
        raise ValidationError("worker_dq: empty worker")
    P = bank_predict_matrix(model.bank, worker.features)
    origins = np.full(worker.n, worker.worker_id, dtype=np.int64)
    labels, confs = leave_out_labels(model.bank, P, origins)
    return dq_from_inference(worker.decisions, labels, confs)


def assess_dq(model: MdeModel, dq: float) -> float:
    """Map a DQ score through all C mappings, truncate each into [0.5, 1],
    and average."""
    vals = [min(1.0, max(0.5, apply_linear(mp, dq))) for mp in model.mappings]
    return float(np.mean(vals))


def assess_worker(model: MdeModel, worker: WorkerDecisionSet) -> float:
    """MDE estimate of the worker's decision accuracy, in [0.5, 1]."""
    return assess_dq(model, worker_dq(model, worker))


def mde_model_to_json(model: MdeModel) -> str:
    """Versioned JSON dump of mapping coefficients and configuration."""
    return json.dumps(
        {
            "version": 1,
            "mode": model.bank.mode,
            "mappings": [[mp.slope, mp.intercept] for mp in model.mappings],
            "mde_config": {
                "c": model.mde_config.c,
                "n": model.mde_config.n,
                "intv": model.mde_config.intv,
                "q_min": model.mde_config.q_min,
                "q_max": model.mde_config.q_max,
                "seed": model.mde_config.seed,
            },
            "classifier_config": {
                "algorithm": model.classifier_config.algorithm,
                "tree_count": model.classifier_config.tree_count,
                "max_depth": model.classifier_config.max_depth,
                "min_leaf_size": model.classifier_config.min_leaf_size,
                "boosting_rounds": model.classifier_config.boosting_rounds,
                "seed": model.classifier_config.seed,
            },
        }
    )
