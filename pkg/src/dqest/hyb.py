"""MDE-HYB: bootstrap-based arbitration between EAR and MDE.

EAR (error-avoidance rate) is the fraction of a worker's ground-truth
records they decided correctly. It is unbiased but high-variance at small
budgets. MDE is model-based and lower-variance but can be biased when the
domain is hard to learn. MDE-HYB estimates, per cohort, which estimator has
the lower error by replaying both against synthetic workers of known
accuracy, then either selects one method or blends the two.

The bootstrap works on the pooled ground-truth records. For each of ``r``
subsamples and ``p`` sampled accuracies q, a synthetic worker is scored by
both estimators and the absolute errors are collected. Two shifted
one-tailed tests then ask whether either method is worse by a margin ``d``;
the per-worker estimates and the branch decision come out of
:func:`decide_and_estimate`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from dqest import rng as rngmod
from dqest.data import GroundTruthPool, WorkerDecisionSet, build_pool
from dqest.dq import ENSEMBLE, dq_from_inference
from dqest.errors import ValidationError
from dqest.learners import ClassifierConfig
from dqest.mde import (
    MdeConfig,
    MdeModel,
    assess_dq,
    assess_worker,
    fit_mde,
    pool_inference,
    round_half_away,
)
from dqest.stats import mean_ci, shifted_one_tailed_test

log = logging.getLogger(__name__)

SELECT_MDE = "select_mde"
SELECT_EAR = "select_ear"
BLEND = "blend"


@dataclass(frozen=True)
class HybConfig:
    """Knobs for the bootstrap and the branch decision.

    d: margin for the shifted one-tailed tests.
    alpha: significance level for branch selection.
    r: number of bootstrap subsamples (at least 2).
    p: accuracies drawn per subsample (at least 1).
    sample_fraction: subsample size as a fraction of the mean worker size.
    ci_alpha: two-sided level for the accuracy interval (0.01 gives 99%).
    literal_flip: if True, the flipped share (MDE side) and the per-record
        flip probability (EAR side) become q instead of 1 - q. This mirrors
        a literal reading of the procedure's description; the default
        reproduces the intended behavior where q is the synthetic worker's
        accuracy.
    seed: base seed for the bootstrap RNG when one is not supplied.
    """

    d: float = 0.01
    alpha: float = 0.02
    r: int = 10
    p: int = 10
    sample_fraction: float = 0.2
    ci_alpha: float = 0.01
    literal_flip: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.d <= 0:
            raise ValidationError(f"d must be positive, got {self.d}")
        if not 0 < self.alpha < 1:
            raise ValidationError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.r < 2:
            raise ValidationError(f"r must be at least 2, got {self.r}")
        if self.p < 1:
            raise ValidationError(f"p must be at least 1, got {self.p}")
        if not 0 < self.sample_fraction <= 1:
            raise ValidationError(
                f"sample_fraction must be in (0, 1], got {self.sample_fraction}"
            )
        if not 0 < self.ci_alpha < 1:
            raise ValidationError(
                f"ci_alpha must be in (0, 1), got {self.ci_alpha}"
            )


@dataclass(frozen=True)
class ErrorDistributions:
    """Absolute estimation errors from the bootstrap, one pair per (r, p)."""

    err_mde: np.ndarray
    err_ear: np.ndarray

    def __post_init__(self) -> None:
        if len(self.err_mde) != len(self.err_ear):
            raise ValidationError(
                "error distributions must have equal length, got "
                f"{len(self.err_mde)} and {len(self.err_ear)}"
            )


@dataclass(frozen=True)
class HybridDecision:
    """Outcome of the branch decision.

    branch: one of SELECT_MDE, SELECT_EAR, BLEND.
    p_mde: p-value of the test whose alternative is "EAR's error exceeds
        MDE's by more than d"; small p_mde favors selecting MDE.
    p_ear: p-value of the reverse test; small p_ear favors selecting EAR.
    weights: (mde_weight, ear_weight) when blending, else None.
    """

    branch: str
    p_mde: float
    p_ear: float
    weights: tuple[float, float] | None = None


def ear_estimate(worker: WorkerDecisionSet) -> float:
    """Fraction of the worker's ground-truth records decided correctly."""
    mask = worker.gt_known
    if not mask.any():
        raise ValidationError(
            f"worker {worker.worker_id} has no ground-truth records"
        )
    return float(
        np.mean(worker.decisions[mask] == worker.true_labels[mask])
    )


def _flip_some(labels: np.ndarray, keep_p: float, rng: np.random.Generator) -> np.ndarray:
    """Each decision equals the label with probability keep_p, else flipped."""
    keep = rng.random(labels.shape[0]) < keep_p
    return np.where(keep, labels, 1 - labels).astype(np.int8)


def generate_error_distributions(
    pool: GroundTruthPool,
    workers: list[WorkerDecisionSet],
    mde_model: MdeModel,
    ear_estimates: list[float],
    mde_estimates: list[float],
    config: HybConfig,
    rng: np.random.Generator | int,
) -> ErrorDistributions:
    """Bootstrap both estimators against synthetic workers of known accuracy.

    An accuracy interval is formed from the per-worker averages of the two
    estimates (a two-sided mean CI at ``config.ci_alpha``, clamped to
    [0, 1]). For each of ``r`` pool subsamples and ``p`` accuracies drawn
    uniformly from that interval, a synthetic worker is built by inverting
    an exact (1 - q) share of the subsample labels, then scored by MDE
    (against the fitted mapping) and by EAR (against a small ground-truth
    draw taken from the same subsample, flipped independently per record
    so the EAR errors carry its sampling noise). Errors are collected in
    (r, p) order.

    The exact share on the MDE side matters: a synthetic worker whose
    realized accuracy equals q by construction isolates the assessment's
    measurement error, which is the quantity the branch decision needs.
    Independent flips there would add binomial realization noise of the
    subsample size, which the real workers (with their larger histories)
    do not carry, and would bias the arbitration toward EAR at mid-size
    budgets.
    """
    if len(pool) == 0:
        raise ValidationError("ground-truth pool is empty")
    if not workers:
        raise ValidationError("no workers supplied")
    if len(ear_estimates) != len(workers) or len(mde_estimates) != len(workers):
        raise ValidationError(
            "estimate lists must align with workers: got "
            f"{len(ear_estimates)} EAR / {len(mde_estimates)} MDE for "
            f"{len(workers)} workers"
        )
    r = rngmod.as_rng(rng)

    avg = (np.asarray(ear_estimates) + np.asarray(mde_estimates)) / 2.0
    lo, hi = mean_ci(avg, alpha=config.ci_alpha)
    lo = max(lo, 0.0)
    hi = min(hi, 1.0)

    mean_n = float(np.mean([w.n for w in workers]))
    t_boot = min(int(np.ceil(config.sample_fraction * mean_n)), len(pool))
    gt_pe = max(1, int(round_half_away(len(pool) / len(workers))))
    replace = gt_pe > t_boot
    if replace:
        log.warning(
            "bootstrap ground-truth draw (%d) exceeds subsample size (%d); "
            "drawing with replacement",
            gt_pe,
            t_boot,
        )

    labels_all, confs_all = pool_inference(mde_model.bank, pool)
    pool_labels = pool.labels.astype(np.int8)

    err_mde = np.empty(config.r * config.p)
    err_ear = np.empty(config.r * config.p)
    k = 0
    for _ in range(config.r):
        sample = r.choice(len(pool), size=t_boot, replace=False)
        for _ in range(config.p):
            q = float(r.uniform(lo, hi))
            keep_p = (1.0 - q) if config.literal_flip else q

            flip_share = q if config.literal_flip else (1.0 - q)
            flips = min(t_boot, round_half_away(t_boot * flip_share))
            decisions = pool_labels[sample].copy()
            if flips:
                idx = r.choice(t_boot, size=flips, replace=False)
                decisions[idx] = 1 - decisions[idx]
            dq = dq_from_inference(
                decisions, labels_all[sample], confs_all[sample]
            )
            err_mde[k] = abs(q - assess_dq(mde_model, dq))

            gt_pick = r.choice(t_boot, size=gt_pe, replace=replace)
            gt_decisions = _flip_some(pool_labels[sample[gt_pick]], keep_p, r)
            q_ear = float(np.mean(gt_decisions == pool_labels[sample[gt_pick]]))
            err_ear[k] = abs(q - q_ear)
            k += 1

    return ErrorDistributions(err_mde, err_ear)


def decide_and_estimate(
    ear_estimates: list[float],
    mde_estimates: list[float],
    dist: ErrorDistributions,
    config: HybConfig,
) -> tuple[list[float], HybridDecision]:
    """Pick a branch from the error distributions and produce final estimates.

    Two shifted one-tailed tests are run. p_mde comes from the test whose
    alternative is "EAR's error exceeds MDE's by more than ``d``"; p_ear
    from the reverse. When neither null can be rejected at ``alpha`` the
    estimates are blended, each weighted by its own p-value (the larger
    p-value weights the method hypothesized to have the smaller error);
    otherwise the rejected test's favored method is selected outright.
    """
    if len(ear_estimates) != len(mde_estimates):
        raise ValidationError(
            "estimate lists must have equal length, got "
            f"{len(ear_estimates)} and {len(mde_estimates)}"
        )
    p_mde = shifted_one_tailed_test(dist.err_ear, dist.err_mde, config.d).p_value
    p_ear = shifted_one_tailed_test(dist.err_mde, dist.err_ear, config.d).p_value

    if p_mde >= config.alpha and p_ear >= config.alpha:
        w_mde = p_mde / (p_mde + p_ear)
        w_ear = p_ear / (p_mde + p_ear)
        estimates = [
            w_mde * m + w_ear * e
            for m, e in zip(mde_estimates, ear_estimates)
        ]
        decision = HybridDecision(BLEND, p_mde, p_ear, (w_mde, w_ear))
    elif p_mde < config.alpha:
        estimates = list(mde_estimates)
        decision = HybridDecision(SELECT_MDE, p_mde, p_ear)
    else:
        estimates = list(ear_estimates)
        decision = HybridDecision(SELECT_EAR, p_mde, p_ear)
    return estimates, decision


@dataclass(frozen=True)
class HybResult:
    """Everything MDE-HYB produced for one cohort."""

    estimates: list[float]
    ear_estimates: list[float]
    mde_estimates: list[float]
    decision: HybridDecision
    distributions: ErrorDistributions


def mde_hyb_full(
    workers: list[WorkerDecisionSet],
    pool: GroundTruthPool | None = None,
    mde_config: MdeConfig | None = None,
    classifier_config: ClassifierConfig | None = None,
    hyb_config: HybConfig | None = None,
    mode: str = ENSEMBLE,
    mde_model: MdeModel | None = None,
    mde_estimates: list[float] | None = None,
) -> HybResult:
    """Run the full hybrid pipeline and keep the intermediate artifacts.

    A pre-fitted ``mde_model`` (with matching ``mde_estimates``) can be
    supplied to avoid refitting when MDE results already exist for the same
    cohort; otherwise both are computed here.
    """
    if not workers:
        raise ValidationError("no workers supplied")
    for w in workers:
        if not w.gt_known.any():
            raise ValidationError(
                f"worker {w.worker_id} has no ground-truth records; every "
                "worker needs at least one"
            )
    if pool is None:
        pool = build_pool(workers)
    mde_config = mde_config or MdeConfig()
    classifier_config = classifier_config or ClassifierConfig()
    hyb_config = hyb_config or HybConfig()

    if mde_model is None:
        mde_model = fit_mde(workers, pool, mde_config, classifier_config, mode)
        mde_estimates = None
    if mde_estimates is None:
        mde_estimates = [assess_worker(mde_model, w) for w in workers]
    ear_estimates = [ear_estimate(w) for w in workers]

    rng = rngmod.spawn(hyb_config.seed, "hyb-bootstrap")
    dist = generate_error_distributions(
        pool, workers, mde_model, ear_estimates, mde_estimates, hyb_config, rng
    )
    estimates, decision = decide_and_estimate(
        ear_estimates, mde_estimates, dist, hyb_config
    )
    return HybResult(estimates, ear_estimates, mde_estimates, decision, dist)


def mde_hyb(
    workers: list[WorkerDecisionSet],
    pool: GroundTruthPool | None = None,
    mde_config: MdeConfig | None = None,
    classifier_config: ClassifierConfig | None = None,
    hyb_config: HybConfig | None = None,
    mode: str = ENSEMBLE,
) -> list[float]:
    """Per-worker accuracy estimates from the hybrid procedure."""
    return mde_hyb_full(
        workers, pool, mde_config, classifier_config, hyb_config, mode
    ).estimates
