"""Base-model bank and the DQ (decision-quality) score.

DQ is the confidence-weighted rate of agreement between a worker's decisions
and labels inferred by an ensemble of per-worker base models, where a model
never votes on instances from its own training set. The exclusion is tracked
by origin bookkeeping: every scored instance carries the id of the worker
whose training data contains it (or none), and that worker's model sits out.

Two single-model ablation modes replace the ensemble: GLOBAL_ALL trains one
model on all records, GLOBAL_GT on ground-truth-flagged records only; there
confidence is the predicted class's probability and nothing is excluded.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from dqest import rng as rngmod
from dqest.data import Instance, WorkerDecisionSet
from dqest.errors import ValidationError
from dqest.learners import ClassifierConfig, TrainedClassifier, predict_p1, train_classifier

ENSEMBLE = "ensemble"
GLOBAL_ALL = "global_all"
GLOBAL_GT = "global_gt"


@dataclass(frozen=True)
class EnsemblePrediction:
    """Inferred label and its unnormalized confidence (summed probability)."""

    label: int
    confidence: float


@dataclass(frozen=True)
class BaseModelBank:
    """Per-worker models (ENSEMBLE) or a single global model (GLOBAL_*)."""

    mode: str
    models: dict[int, TrainedClassifier] = field(repr=False)
    global_model: TrainedClassifier | None = field(repr=False)
    training_origin: dict[int, int] = field(repr=False)
    worker_ids: tuple[int, ...] = ()

    @property
    def model_count(self) -> int:
        return len(self.models) if self.mode == ENSEMBLE else 1


def _training_labels(w: WorkerDecisionSet) -> np.ndarray:
    """Noisy decisions with ground truth substituted where flagged."""
    if (w.true_labels[w.gt_known] < 0).any():
        raise ValidationError(
            f"worker {w.worker_id}: flagged record without a true label"
        )
    return np.where(w.gt_known, w.true_labels, w.decisions).astype(np.int8)


def train_bank(
    workers: Sequence[WorkerDecisionSet],
    config: ClassifierConfig,
    mode: str = ENSEMBLE,
) -> BaseModelBank:
    """Train the base-model bank.

    Training labels are each worker's decisions with the verified label
    substituted on flagged records; the substitution affects training data
    only, never the decisions being scored. Model seeds are derived from
    config.seed per worker, so the bank is deterministic as a whole.
    """
    if mode not in (ENSEMBLE, GLOBAL_ALL, GLOBAL_GT):
        raise ValidationError(f"train_bank: unknown mode {mode!r}")
    if not workers:
        raise ValidationError("train_bank: no workers")
    if mode == ENSEMBLE and len(workers) < 2:
        raise ValidationError("train_bank: ENSEMBLE mode needs at least 2 workers")

    origin: dict[int, int] = {}
    for w in workers:
        for iid in w.instance_ids.tolist():
            if iid in origin:
                raise ValidationError(
                    f"instance {iid} appears in workers {origin[iid]} and {w.worker_id}"
                )
            origin[iid] = w.worker_id

    if mode == ENSEMBLE:
        models = {
            w.worker_id: train_classifier(
                replace(config, seed=rngmod.derive_seed(config.seed, "bank", w.worker_id)),
                (w.features, _training_labels(w)),
            )
            for w in workers
        }
        return BaseModelBank(
            mode, models, None, origin, tuple(w.worker_id for w in workers)
        )

    if mode == GLOBAL_ALL:
        X = np.concatenate([w.features for w in workers])
        y = np.concatenate([_training_labels(w) for w in workers])
    else:
        flagged = [w for w in workers if w.gt_known.any()]
        if not flagged:
            raise ValidationError("train_bank: GLOBAL_GT with zero ground-truth records")
        X = np.concatenate([w.features[w.gt_known] for w in flagged])
        y = np.concatenate([w.true_labels[w.gt_known] for w in flagged]).astype(np.int8)
    model = train_classifier(
        replace(config, seed=rngmod.derive_seed(config.seed, "bank", "global")), (X, y)
    )
    return BaseModelBank(
        mode, {}, model, origin, tuple(w.worker_id for w in workers)
    )


def bank_predict_matrix(bank: BaseModelBank, X: np.ndarray) -> np.ndarray:
    """Class-1 probabilities, one row per bank model, over the rows of X."""
    if bank.mode == ENSEMBLE:
        return np.stack([predict_p1(bank.models[wid], X) for wid in bank.worker_ids])
    assert bank.global_model is not None
    return predict_p1(bank.global_model, X).reshape(1, -1)


def leave_out_labels(
    bank: BaseModelBank, P: np.ndarray, origins: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Inferred label and confidence per column of P, excluding origin models.

    `origins[i]` is the worker id whose training data holds instance i, or
    -1 for none. Ties on the summed vote go to class 0.
    """
    if bank.mode == ENSEMBLE:
        k = len(bank.worker_ids)
        row_of = {wid: r for r, wid in enumerate(bank.worker_ids)}
        rows = np.array([row_of.get(int(o), -1) for o in origins], dtype=np.int64)
        s1 = P.sum(axis=0)
        present = rows >= 0
        cols = np.flatnonzero(present)
        s1[cols] -= P[rows[cols], cols]
        count = np.where(present, k - 1, k).astype(np.float64)
        if (count < 1).any():
            raise ValidationError("leave_out_labels: exclusion removed every model")
    else:
        s1 = P[0].copy()
        count = np.ones_like(s1)
    labels = (2.0 * s1 > count).astype(np.int8)
    confs = np.where(labels == 1, s1, count - s1)
    return labels, confs


def ensemble_infer(
    bank: BaseModelBank, instance: Instance, exclude_origin: int | None = None
) -> EnsemblePrediction:
    """Infer one instance's label from the bank, excluding the origin model.

    ENSEMBLE mode sums class probabilities across the eligible models and
    takes the argmax (ties toward class 0); confidence is the summed
    probability of the chosen class. GLOBAL modes use the single model's
    argmax and its predicted-class probability.
    """
    vec = np.asarray(instance.features, dtype=np.float64).reshape(1, -1)
    if bank.mode == ENSEMBLE:
        eligible = [wid for wid in bank.worker_ids if wid != exclude_origin]
        if not eligible:
            raise ValidationError("ensemble_infer: exclusion removed every model")
        s1 = 0.0
        for wid in eligible:
            s1 += float(predict_p1(bank.models[wid], vec)[0])
        count = float(len(eligible))
    else:
        assert bank.global_model is not None
        s1 = float(predict_p1(bank.global_model, vec)[0])
        count = 1.0
    label = 1 if 2.0 * s1 > count else 0
    conf = s1 if label == 1 else count - s1
    return EnsemblePrediction(label, conf)


def dq_from_inference(
    decisions: np.ndarray, labels: np.ndarray, confs: np.ndarray
) -> float:
    """Confidence-weighted agreement: agree-conf / (agree-conf + disagree-conf)."""
    agree = decisions == labels
    a = float(confs[agree].sum())
    d = float(confs[~agree].sum())
    if a + d == 0.0:
        return 0.5
    return a / (a + d)


def dq_score(
    decisions: Sequence[tuple[Instance, int, int | None]], bank: BaseModelBank
) -> float:
    """DQ score of a decision list.

    Each element is (instance, decision, origin worker id or None); the
    origin's model is excluded from that instance's inference. Returns the
    confidence-weighted agreement rate in [0, 1]; the degenerate both-sums-
    zero case returns 0.5.
    """
    if not decisions:
        raise ValidationError("dq_score: empty decision list")
    X = np.stack([np.asarray(inst.features, dtype=np.float64) for inst, _, _ in decisions])
    dec = np.array([d for _, d, _ in decisions], dtype=np.int8)
    origins = np.array(
        [-1 if o is None else int(o) for _, _, o in decisions], dtype=np.int64
    )
    P = bank_predict_matrix(bank, X)
    labels, confs = leave_out_labels(bank, P, origins)
    return dq_from_inference(dec, labels, confs)
