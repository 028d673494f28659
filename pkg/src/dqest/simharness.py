"""Simulation harness: cohorts with known accuracies, budget sweeps, MAE.

The protocol: partition a corpus among K simulated workers whose target
accuracies come from a profile, flip each decision independently with
probability 1 - g, sweep ground-truth budgets, run the selected estimators,
and score each with the mean absolute error against the target accuracies.
Repetitions redraw everything from derived sub-seeds; a paired two-sided
t-test against a reference method produces the significance stars in the
summary.

Worker decisions here use independent Bernoulli flips. Synthetic workers
inside the estimator use exact flip counts. The two are deliberately
different mechanisms and are never interchanged.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from dqest import __version__, corpora
from dqest import rng as rngmod
from dqest._backend import BACKEND
from dqest.baselines import gm_all_estimate, gm_gt_estimate
from dqest.data import (
    Corpus,
    GroundTruthPool,
    WorkerDecisionSet,
    build_pool,
    partition_workers,
    percentile_threshold,
    sample_ground_truth,
)
from dqest.dq import GLOBAL_ALL, GLOBAL_GT
from dqest.errors import ConfigError, ValidationError
from dqest.exclusive import mde_exclusive
from dqest.hyb import HybConfig, ear_estimate, mde_hyb_full
from dqest.learners import ClassifierConfig
from dqest.mde import MdeConfig, assess_worker, fit_mde
from dqest.stats import paired_t_test, stars

log = logging.getLogger(__name__)

EAR = "ear"
MDE = "mde"
MDE_HYB = "mde-hyb"
GM_GT = "gm-gt"
GM_ALL = "gm-all"
MDE_EXC = "mde-exc"
MDE_GM_ALL = "mde-gm-all"
MDE_SM_GT = "mde-sm-gt"

METHODS = (EAR, MDE, MDE_HYB, GM_GT, GM_ALL, MDE_EXC, MDE_GM_ALL, MDE_SM_GT)

# Everything except GM-ALL needs at least one verified record per worker
# (or, for the exclusive variant, a non-empty pool).
_NEEDS_GT = frozenset(METHODS) - {GM_ALL}

# Methods valid in the exclusive arrangement.
_EXC_COMPATIBLE = frozenset({MDE_EXC, GM_GT, GM_ALL})


@dataclass(frozen=True)
class WorkerProfile:
    """Target accuracies for a simulated cohort, one per worker."""

    accuracies: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.accuracies) < 2:
            raise ValidationError("profile needs at least 2 workers")
        for g in self.accuracies:
            if not 0.5 < g <= 1.0:
                raise ValidationError(
                    f"profile accuracy {g} outside (0.5, 1]"
                )

    def __len__(self) -> int:
        return len(self.accuracies)


def profile_by_name(name: str) -> WorkerProfile:
    """Resolve "low", "high", or "amt" to a WorkerProfile."""
    return WorkerProfile(corpora.get_profile(name))


@dataclass(frozen=True)
class CorrelatedSpec:
    """Correlated-error regime: harder instances get a higher error rate.

    feature_index None picks the highest-variance continuous feature of the
    corpus (logged). The hard region is the top (1 - percentile) tail.
    """

    feature_index: int | None = None
    percentile: float = 0.9
    extra_error: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 < self.percentile < 1.0:
            raise ValidationError(
                f"percentile must be in (0, 1), got {self.percentile}"
            )
        if not 0.0 <= self.extra_error <= 0.5:
            raise ValidationError(
                f"extra_error must be in [0, 0.5], got {self.extra_error}"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark sweep: corpus x profile x budgets x methods."""

    corpus: str = "synth-spam"
    profile: WorkerProfile = field(
        default_factory=lambda: WorkerProfile(corpora.LOW_PROFILE)
    )
    budgets: tuple[int, ...] = (5, 10, 25, 50, 100)
    repetitions: int = 50
    correlated: CorrelatedSpec | None = None
    learner: ClassifierConfig = field(default_factory=ClassifierConfig)
    methods: tuple[str, ...] = (MDE_HYB, EAR, MDE, GM_GT, GM_ALL)
    reference: str | None = None
    master_seed: int = 0
    mde: MdeConfig = field(default_factory=MdeConfig)
    hyb: HybConfig = field(default_factory=HybConfig)

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ConfigError(
                f"repetitions must be >= 1, got {self.repetitions}"
            )
        if not self.budgets:
            raise ConfigError("at least one budget is required")
        for b in self.budgets:
            if b < 0:
                raise ConfigError(f"budgets must be >= 0, got {b}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(
                f"unknown methods {unknown}; valid: {list(METHODS)}"
            )
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate method names")
        if self.reference is not None and self.reference not in self.methods:
            raise ConfigError(
                f"reference {self.reference!r} is not among the methods"
            )
        if MDE_EXC in self.methods:
            bad = [m for m in self.methods if m not in _EXC_COMPATIBLE]
            if bad:
                raise ConfigError(
                    f"{MDE_EXC} uses the exclusive arrangement; methods {bad} "
                    "cannot run alongside it"
                )
            if self.correlated is not None:
                raise ConfigError(
                    "correlated errors are not supported in the exclusive "
                    "arrangement"
                )

    @property
    def resolved_reference(self) -> str:
        if self.reference is not None:
            return self.reference
        if MDE_HYB in self.methods:
            return MDE_HYB
        if MDE_EXC in self.methods:
            return MDE_EXC
        return self.methods[0]


@dataclass(frozen=True)
class ExperimentResult:
    """Repetition-level MAEs plus aggregates, keyed by (method, budget)."""

    config: ExperimentConfig
    maes: dict[tuple[str, int], np.ndarray]
    mean_mae: dict[tuple[str, int], float]
    p_vs_reference: dict[tuple[str, int], float]
    reference: str
    notices: tuple[str, ...]
    metadata: dict[str, str]


def mae(estimates: list[float], truths: list[float]) -> float:
    """Mean absolute error between estimates and true accuracies."""
    if len(estimates) != len(truths) or not estimates:
        raise ValidationError(
            f"mae: need equal non-empty lists, got {len(estimates)} and "
            f"{len(truths)}"
        )
    return float(
        np.mean(np.abs(np.asarray(estimates) - np.asarray(truths)))
    )


def ear_binomial_mad(g: float, t: int) -> float:
    """Exact expected |k/t - g| for k ~ Binomial(t, g).

    The EAR estimate at budget t is k/t for k correct among t verified
    records, so this enumeration is EAR's exact per-worker MAE.
    """
    if not 0.0 <= g <= 1.0 or t < 1:
        raise ValidationError(f"ear_binomial_mad: bad arguments g={g}, t={t}")
    total = 0.0
    for k in range(t + 1):
        total += math.comb(t, k) * g**k * (1 - g) ** (t - k) * abs(k / t - g)
    return total


def _decide(
    corpus: Corpus,
    subsets: list[np.ndarray],
    profile: WorkerProfile,
    rng: np.random.Generator,
) -> list[WorkerDecisionSet]:
    """Turn row subsets into workers with Bernoulli-flipped decisions."""
    workers = []
    for k, idx in enumerate(subsets):
        labels = corpus.labels[idx].astype(np.int8)
        keep = rng.random(idx.shape[0]) < profile.accuracies[k]
        decisions = np.where(keep, labels, 1 - labels).astype(np.int8)
        workers.append(
            WorkerDecisionSet(
                worker_id=k,
                instance_ids=corpus.ids[idx],
                features=corpus.features[idx],
                true_labels=labels,
                decisions=decisions,
                gt_known=np.zeros(idx.shape[0], dtype=bool),
            )
        )
    return workers


def simulate_cohort(
    corpus: Corpus, profile: WorkerProfile, rng: np.random.Generator | int
) -> list[WorkerDecisionSet]:
    """Partition the corpus and simulate one worker per profile accuracy."""
    r = rngmod.as_rng(rng)
    subsets = partition_workers(corpus, len(profile), r)
    return _decide(corpus, subsets, profile, r)


def auto_feature(corpus: Corpus) -> int:
    """Default correlated-error feature: highest-variance continuous column.

    A column counts as continuous when it takes more than 10 distinct
    values; if none does, the plain highest-variance column is used.
    """
    variances = corpus.features.var(axis=0)
    continuous = np.array(
        [np.unique(corpus.features[:, j]).shape[0] > 10 for j in range(corpus.n_features)]
    )
    if continuous.any():
        masked = np.where(continuous, variances, -np.inf)
    else:
        masked = variances
    j = int(np.argmax(masked))
    log.info("correlated-error feature defaulted to %d (variance %.4g)", j, variances[j])
    return j


def _region_rates(g: float, f: float, extra_error: float) -> tuple[float, float]:
    """Per-region error rates preserving the worker's overall rate.

    With hard-region fraction f and overall error e = 1 - g, the hard rate
    is e + extra_error (capped at 1) and the easy rate absorbs the rest.
    Clipping the easy rate is tolerated up to a 0.01 residual in the
    realized overall rate; beyond that the overall rate is infeasible.
    """
    e = 1.0 - g
    e_h = min(e + extra_error, 1.0)
    if f >= 1.0:
        e_l = 0.0
        realized = e_h
    else:
        e_l = (e - f * e_h) / (1.0 - f)
        clipped = min(1.0, max(0.0, e_l))
        realized = f * e_h + (1.0 - f) * clipped
        if clipped != e_l:
            residual = abs(realized - e)
            if residual > 0.01:
                raise ConfigError(
                    f"correlated errors infeasible: overall rate {e:.3f} "
                    f"unreachable with hard fraction {f:.3f} and extra "
                    f"{extra_error}; residual {residual:.4f}"
                )
            log.warning(
                "easy-region error rate clipped (%.4f -> %.4f), residual %.4f",
                e_l,
                clipped,
                residual,
            )
        e_l = clipped
    return e_h, e_l


def simulate_correlated(
    corpus: Corpus,
    profile: WorkerProfile,
    feature_index: int,
    percentile: float,
    extra_error: float,
    rng: np.random.Generator | int,
) -> list[WorkerDecisionSet]:
    """Simulate a cohort whose errors concentrate on hard instances.

    Instances above the feature's percentile threshold form the hard
    region. Each worker's hard-region error rate is raised by
    ``extra_error`` and the easy-region rate lowered so the overall rate
    stays 1 - g.
    """
    r = rngmod.as_rng(rng)
    threshold = percentile_threshold(corpus, feature_index, percentile)
    hard_all = corpus.features[:, feature_index] > threshold
    if not hard_all.any():
        raise ValidationError(
            f"hard region is empty: no value of feature {feature_index} "
            f"exceeds {threshold}"
        )
    subsets = partition_workers(corpus, len(profile), r)
    workers = []
    for k, idx in enumerate(subsets):
        labels = corpus.labels[idx].astype(np.int8)
        hard = hard_all[idx]
        f = float(np.mean(hard))
        e_h, e_l = _region_rates(profile.accuracies[k], f, extra_error)
        err_p = np.where(hard, e_h, e_l)
        flip = r.random(idx.shape[0]) < err_p
        decisions = np.where(flip, 1 - labels, labels).astype(np.int8)
        workers.append(
            WorkerDecisionSet(
                worker_id=k,
                instance_ids=corpus.ids[idx],
                features=corpus.features[idx],
                true_labels=labels,
                decisions=decisions,
                gt_known=np.zeros(idx.shape[0], dtype=bool),
            )
        )
    return workers


def _cell_seeds(config: ExperimentConfig, tag: str, rep: int, budget: int) -> int:
    return rngmod.derive_seed(config.master_seed, tag, rep, budget)


def _run_standard_cell(
    config: ExperimentConfig,
    methods: list[str],
    workers: list[WorkerDecisionSet],
    truths: list[float],
    rep: int,
    budget: int,
) -> dict[tuple[str, int], float]:
    """All non-exclusive methods for one (repetition, budget) cell."""
    out: dict[tuple[str, int], float] = {}
    learner_cfg = replace(
        config.learner, seed=_cell_seeds(config, "learner", rep, budget)
    )
    pool: GroundTruthPool | None = None
    if any(m in methods for m in (MDE, MDE_HYB, MDE_GM_ALL, MDE_SM_GT)):
        pool = build_pool(workers)

    if MDE in methods or MDE_HYB in methods:
        mde_cfg = replace(config.mde, seed=_cell_seeds(config, "mde", rep, budget))
        model = fit_mde(workers, pool, mde_cfg, learner_cfg)
        mde_est = [assess_worker(model, w) for w in workers]
        if MDE in methods:
            out[(MDE, budget)] = mae(mde_est, truths)
        if MDE_HYB in methods:
            hyb_cfg = replace(
                config.hyb, seed=_cell_seeds(config, "hyb", rep, budget)
            )
            res = mde_hyb_full(
                workers,
                pool,
                mde_cfg,
                learner_cfg,
                hyb_cfg,
                mde_model=model,
                mde_estimates=mde_est,
            )
            out[(MDE_HYB, budget)] = mae(res.estimates, truths)

    for method, mode in ((MDE_GM_ALL, GLOBAL_ALL), (MDE_SM_GT, GLOBAL_GT)):
        if method not in methods:
            continue
        cfg = replace(config.mde, seed=_cell_seeds(config, method, rep, budget))
        lcfg = replace(
            config.learner, seed=_cell_seeds(config, method + "-learner", rep, budget)
        )
        model = fit_mde(workers, pool, cfg, lcfg, mode=mode)
        out[(method, budget)] = mae(
            [assess_worker(model, w) for w in workers], truths
        )

    if EAR in methods:
        out[(EAR, budget)] = mae([ear_estimate(w) for w in workers], truths)
    if GM_GT in methods:
        cfg = replace(config.learner, seed=_cell_seeds(config, GM_GT, rep, budget))
        out[(GM_GT, budget)] = mae(gm_gt_estimate(workers, cfg), truths)
    if GM_ALL in methods:
        cfg = replace(config.learner, seed=_cell_seeds(config, GM_ALL, rep, budget))
        out[(GM_ALL, budget)] = mae(gm_all_estimate(workers, cfg), truths)
    return out


def _run_exclusive_cell(
    config: ExperimentConfig,
    corpus: Corpus,
    truths: list[float],
    rep: int,
    budget: int,
) -> dict[tuple[str, int], float]:
    """Exclusive-arrangement methods for one (repetition, budget) cell.

    The pool (K * budget instances) is carved out first; the rest is
    partitioned among the workers, so cohorts differ across budgets here.
    """
    out: dict[tuple[str, int], float] = {}
    k = len(config.profile)
    r = rngmod.spawn(config.master_seed, "exclusive", rep, budget)
    perm = r.permutation(len(corpus))
    pool_idx = np.sort(perm[: k * budget])
    rest_idx = perm[k * budget :]
    pool = GroundTruthPool(
        instance_ids=corpus.ids[pool_idx],
        features=corpus.features[pool_idx],
        labels=corpus.labels[pool_idx],
        origins=np.full(pool_idx.shape[0], -1, dtype=np.int64),
        exclusive=True,
    )
    rest = Corpus(
        np.ascontiguousarray(corpus.features[rest_idx]),
        corpus.labels[rest_idx],
        corpus.ids[rest_idx],
    )
    subsets = partition_workers(rest, k, r)
    workers = _decide(rest, subsets, config.profile, r)

    learner_cfg = replace(
        config.learner, seed=_cell_seeds(config, "learner", rep, budget)
    )
    if MDE_EXC in config.methods:
        mde_cfg = replace(config.mde, seed=_cell_seeds(config, "mde", rep, budget))
        share_rng = rngmod.spawn(config.master_seed, "exclusive-share", rep, budget)
        est = mde_exclusive(workers, pool, mde_cfg, learner_cfg, share_rng)
        out[(MDE_EXC, budget)] = mae(est, truths)
    if GM_GT in config.methods:
        cfg = replace(config.learner, seed=_cell_seeds(config, GM_GT, rep, budget))
        out[(GM_GT, budget)] = mae(
            gm_gt_estimate(workers, cfg, exclusive_pool=pool), truths
        )
    if GM_ALL in config.methods:
        cfg = replace(config.learner, seed=_cell_seeds(config, GM_ALL, rep, budget))
        out[(GM_ALL, budget)] = mae(
            gm_all_estimate(workers, cfg, exclusive_pool=pool), truths
        )
    return out


def _runnable_methods(config: ExperimentConfig, budget: int) -> list[str]:
    if budget > 0:
        return list(config.methods)
    return [m for m in config.methods if m not in _NEEDS_GT]


def _validate_budgets(config: ExperimentConfig, corpus: Corpus) -> None:
    k = len(config.profile)
    exclusive = MDE_EXC in config.methods
    for b in config.budgets:
        if exclusive:
            # K instances must remain after carving the pool.
            if b > 0 and len(corpus) - k * b < k:
                raise ConfigError(
                    f"budget {b} leaves no instances for {k} workers in "
                    f"corpus of {len(corpus)}"
                )
        elif b > len(corpus) // k:
            raise ConfigError(
                f"budget {b} exceeds the per-worker load "
                f"{len(corpus) // k} ({len(corpus)} instances, {k} workers)"
            )


def _run_rep(
    config: ExperimentConfig, corpus: Corpus, rep: int
) -> dict[tuple[str, int], float]:
    truths = list(config.profile.accuracies)
    exclusive = MDE_EXC in config.methods
    out: dict[tuple[str, int], float] = {}

    if exclusive:
        for budget in config.budgets:
            if budget == 0:
                workers = simulate_cohort(
                    corpus, config.profile, rngmod.spawn(config.master_seed, "cohort", rep)
                )
                for m in _runnable_methods(config, 0):
                    cfg = replace(
                        config.learner, seed=_cell_seeds(config, m, rep, 0)
                    )
                    out[(m, 0)] = mae(gm_all_estimate(workers, cfg), truths)
                continue
            out.update(_run_exclusive_cell(config, corpus, truths, rep, budget))
        return out

    cohort_rng = rngmod.spawn(config.master_seed, "cohort", rep)
    if config.correlated is not None:
        spec = config.correlated
        fi = spec.feature_index if spec.feature_index is not None else auto_feature(corpus)
        base = simulate_correlated(
            corpus, config.profile, fi, spec.percentile, spec.extra_error, cohort_rng
        )
    else:
        base = simulate_cohort(corpus, config.profile, cohort_rng)

    for budget in config.budgets:
        runnable = _runnable_methods(config, budget)
        if not runnable:
            continue
        if budget == 0:
            workers = base
        else:
            gt_rng = rngmod.spawn(config.master_seed, "gt", rep, budget)
            workers = [sample_ground_truth(w, budget, gt_rng) for w in base]
        out.update(
            _run_standard_cell(config, runnable, workers, truths, rep, budget)
        )
    return out


_POOL_CTX: tuple[ExperimentConfig, Corpus] | None = None


def _pool_init(config: ExperimentConfig, corpus: Corpus) -> None:
    global _POOL_CTX
    _POOL_CTX = (config, corpus)


def _pool_rep(rep: int) -> dict[tuple[str, int], float]:
    config, corpus = _POOL_CTX
    return _run_rep(config, corpus, rep)


def _metadata(config: ExperimentConfig, reference: str) -> dict[str, str]:
    lrn = config.learner
    md = {
        "tool": f"dqest {__version__}",
        "backend": BACKEND,
        "corpus": config.corpus,
        "workers": str(len(config.profile)),
        "profile": ",".join(f"{g:g}" for g in config.profile.accuracies),
        "budgets": ",".join(str(b) for b in config.budgets),
        "repetitions": str(config.repetitions),
        "methods": ",".join(config.methods),
        "reference": reference,
        "master_seed": str(config.master_seed),
        "learner": (
            f"{lrn.algorithm} trees={lrn.tree_count} depth={lrn.max_depth} "
            f"min_leaf={lrn.min_leaf_size} rounds={lrn.boosting_rounds}"
        ),
        "mde": f"c={config.mde.c} n={config.mde.n} intv={config.mde.intv:g}",
        "hyb": (
            f"d={config.hyb.d:g} alpha={config.hyb.alpha:g} r={config.hyb.r} "
            f"p={config.hyb.p}"
        ),
    }
    if config.correlated is not None:
        md["correlated"] = (
            f"feature={config.correlated.feature_index} "
            f"percentile={config.correlated.percentile:g} "
            f"extra={config.correlated.extra_error:g}"
        )
    return md


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run the full sweep and aggregate.

    Repetitions are the unit of parallelism; each draws only from seeds
    derived from (master_seed, purpose, rep, budget), so the result is
    identical for any ``jobs``.
    """
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    corpus = corpora.get_corpus(config.corpus)
    if len(config.profile) > len(corpus):
        raise ConfigError(
            f"profile has {len(config.profile)} workers but corpus only "
            f"{len(corpus)} instances"
        )
    _validate_budgets(config, corpus)

    notices = []
    for b in config.budgets:
        skipped = [m for m in config.methods if m in _NEEDS_GT] if b == 0 else []
        for m in skipped:
            notices.append(
                f"method {m} needs ground truth; skipped at budget 0"
            )

    if jobs == 1 or config.repetitions == 1:
        per_rep = [
            _run_rep(config, corpus, rep) for rep in range(config.repetitions)
        ]
    else:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(
            min(jobs, config.repetitions),
            initializer=_pool_init,
            initargs=(config, corpus),
        ) as pool:
            per_rep = pool.map(_pool_rep, range(config.repetitions))

    maes: dict[tuple[str, int], np.ndarray] = {}
    for method in config.methods:
        for budget in config.budgets:
            key = (method, budget)
            if key in per_rep[0]:
                maes[key] = np.array([r[key] for r in per_rep])

    mean_mae = {k: float(np.mean(v)) for k, v in maes.items()}
    reference = config.resolved_reference
    p_vs_reference: dict[tuple[str, int], float] = {}
    if config.repetitions >= 2:
        for (method, budget), vals in maes.items():
            ref_key = (reference, budget)
            if method == reference or ref_key not in maes:
                continue
            p_vs_reference[(method, budget)] = paired_t_test(maes[ref_key], vals)

    return ExperimentResult(
        config=config,
        maes=maes,
        mean_mae=mean_mae,
        p_vs_reference=p_vs_reference,
        reference=reference,
        notices=tuple(dict.fromkeys(notices)),
        metadata=_metadata(config, reference),
    )


def _meta_lines(result: ExperimentResult) -> list[str]:
    return [f"# {k}: {v}" for k, v in result.metadata.items()] + [
        f"# notice: {n}" for n in result.notices
    ]


def result_csv(result: ExperimentResult) -> str:
    """Repetition-level CSV: method,budget,rep,mae."""
    lines = ["method,budget,rep,mae"]
    for method in result.config.methods:
        for budget in result.config.budgets:
            vals = result.maes.get((method, budget))
            if vals is None:
                continue
            for rep, v in enumerate(vals):
                lines.append(f"{method},{budget},{rep},{v:.6f}")
    return "\n".join(lines) + "\n"


def _improv(result: ExperimentResult, method: str, budget: int) -> str:
    """Percent of the competitor's MAE removed by the reference method."""
    comp = result.mean_mae.get((method, budget))
    ref = result.mean_mae.get((result.reference, budget))
    if comp is None or ref is None or comp == 0.0:
        return ""
    return f"{(comp - ref) / comp * 100.0:.1f}"


def _stars(result: ExperimentResult, method: str, budget: int) -> str:
    p = result.p_vs_reference.get((method, budget))
    return stars(p) if p is not None else ""


def summary_csv(result: ExperimentResult) -> str:
    """Aggregate CSV: method,budget,mean_mae,improv_vs_ref,stars."""
    lines = _meta_lines(result) + ["method,budget,mean_mae,improv_vs_ref,stars"]
    for method in result.config.methods:
        for budget in result.config.budgets:
            mean = result.mean_mae.get((method, budget))
            if mean is None:
                continue
            improv = "" if method == result.reference else _improv(result, method, budget)
            lines.append(
                f"{method},{budget},{mean:.6f},{improv},"
                f"{_stars(result, method, budget)}"
            )
    return "\n".join(lines) + "\n"


def markdown_table(result: ExperimentResult) -> str:
    """Markdown summary: one row per budget, reference first, competitors
    paired with their improvement columns."""
    ref = result.reference
    competitors = [m for m in result.config.methods if m != ref]
    header = ["gt per worker", ref.upper()]
    for m in competitors:
        header += [m.upper(), "improv."]
    lines = _meta_lines(result)
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join(["---"] * len(header)) + "|")
    for budget in result.config.budgets:
        row = [str(budget)]
        ref_mean = result.mean_mae.get((ref, budget))
        row.append("" if ref_mean is None else f"{ref_mean:.3f}")
        for m in competitors:
            mean = result.mean_mae.get((m, budget))
            if mean is None:
                row += ["", ""]
                continue
            improv = _improv(result, m, budget)
            row.append(f"{mean:.3f}{_stars(result, m, budget)}")
            row.append(improv + "%" if improv else "")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
