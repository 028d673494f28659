"""Global-model baselines GM-GT and GM-ALL.

Both train a single classifier over the cohort and score each worker by
agreement with reference labels: the true label where ground truth is
flagged, the model's prediction elsewhere. They differ only in training
data. GM-GT uses the flagged records with their true labels; GM-ALL uses
every record, substituting true labels where flagged and trusting the
workers' decisions elsewhere.
"""

from __future__ import annotations

import numpy as np

from dqest.data import GroundTruthPool, WorkerDecisionSet
from dqest.errors import ValidationError
from dqest.learners import ClassifierConfig, TrainedClassifier, predict_p1, train_classifier


def _agreement_estimates(
    workers: list[WorkerDecisionSet], model: TrainedClassifier
) -> list[float]:
    out = []
    for w in workers:
        if w.n == 0:
            raise ValidationError(f"worker {w.worker_id} has no records")
        predicted = (predict_p1(model, w.features) > 0.5).astype(np.int8)
        reference = np.where(w.gt_known, w.true_labels, predicted)
        out.append(float(np.mean(w.decisions == reference)))
    return out


def _stack_training(
    parts_x: list[np.ndarray],
    parts_y: list[np.ndarray],
    exclusive_pool: GroundTruthPool | None,
) -> tuple[np.ndarray, np.ndarray]:
    if exclusive_pool is not None and len(exclusive_pool) > 0:
        parts_x = parts_x + [exclusive_pool.features]
        parts_y = parts_y + [exclusive_pool.labels.astype(np.int8)]
    if not parts_x:
        raise ValidationError("no training records available")
    return np.concatenate(parts_x), np.concatenate(parts_y)


def gm_gt_estimate(
    workers: list[WorkerDecisionSet],
    classifier_config: ClassifierConfig | None = None,
    exclusive_pool: GroundTruthPool | None = None,
) -> list[float]:
    """Estimate accuracies with a model trained on ground-truth records only.

    In the exclusive arrangement, pass the exclusive pool; its records are
    added to (or, when no worker record is flagged, form all of) the
    training data.
    """
    if not workers:
        raise ValidationError("no workers supplied")
    cfg = classifier_config or ClassifierConfig()
    xs, ys = [], []
    for w in workers:
        mask = w.gt_known
        if mask.any():
            xs.append(w.features[mask])
            ys.append(w.true_labels[mask].astype(np.int8))
    try:
        X, y = _stack_training(xs, ys, exclusive_pool)
    except ValidationError:
        raise ValidationError(
            "GM-GT needs at least one ground-truth record"
        ) from None
    model = train_classifier(cfg, (X, y))
    return _agreement_estimates(workers, model)


def gm_all_estimate(
    workers: list[WorkerDecisionSet],
    classifier_config: ClassifierConfig | None = None,
    exclusive_pool: GroundTruthPool | None = None,
) -> list[float]:
    """Estimate accuracies with a model trained on every record.

    Training labels are the true labels where flagged and the workers'
    decisions elsewhere, so the model absorbs whatever noise the cohort
    produced.
    """
    if not workers:
        raise ValidationError("no workers supplied")
    cfg = classifier_config or ClassifierConfig()
    xs, ys = [], []
    for w in workers:
        if w.n == 0:
            raise ValidationError(f"worker {w.worker_id} has no records")
        xs.append(w.features)
        ys.append(
            np.where(w.gt_known, w.true_labels, w.decisions).astype(np.int8)
        )
    X, y = _stack_training(xs, ys, exclusive_pool)
    model = train_classifier(cfg, (X, y))
    return _agreement_estimates(workers, model)
