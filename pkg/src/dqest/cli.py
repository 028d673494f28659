"""Command-line entry points.

Two subcommands. `assess` reads a worker decisions CSV, runs one estimator,
and writes an estimates CSV. `bench` runs a simulation sweep from a flat
`key = value` config file and writes result/summary CSVs plus a markdown
table.

Exit codes: 0 success, 1 runtime failure (bad data, infeasible inputs),
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from pathlib import Path

import numpy as np

from dqest import __version__
from dqest import rng as rngmod
from dqest._backend import BACKEND
from dqest.baselines import gm_all_estimate, gm_gt_estimate
from dqest.data import GroundTruthPool, WorkerDecisionSet, build_pool
from dqest.dq import GLOBAL_ALL, GLOBAL_GT
from dqest.errors import ConfigError, DataFormatError, DqError, ValidationError
from dqest.exclusive import mde_exclusive
from dqest.hyb import HybConfig, ear_estimate, mde_hyb_full
from dqest.learners import ClassifierConfig, FOREST, LOGITBOOST
from dqest.mde import MdeConfig, assess_worker, fit_mde
from dqest import simharness
from dqest.simharness import (
    CorrelatedSpec,
    EAR,
    ExperimentConfig,
    GM_ALL,
    GM_GT,
    MDE,
    MDE_EXC,
    MDE_GM_ALL,
    MDE_HYB,
    MDE_SM_GT,
    METHODS,
    WorkerProfile,
    markdown_table,
    profile_by_name,
    result_csv,
    run_experiment,
    summary_csv,
)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_kv(text: str) -> dict[str, str]:
    """Parse flat `key = value` lines; '#' comments and blanks allowed."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _conv(key: str, value: str, kind: type):
    try:
        if kind is bool:
            low = value.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(value)
        return kind(value)
    except ValueError:
        raise ConfigError(
            f"config key {key!r}: cannot parse {value!r} as {kind.__name__}"
        ) from None


def _pop_group(kv: dict[str, str], prefix: str, spec: dict[str, type]) -> dict:
    """Extract `prefix.*` keys, converting values per the field spec."""
    out = {}
    for key in list(kv):
        if not key.startswith(prefix + "."):
            continue
        name = key[len(prefix) + 1 :]
        if name not in spec:
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = _conv(key, kv.pop(key), spec[name])
    return out


_LEARNER_SPEC = {
    "algorithm": str,
    "tree_count": int,
    "max_depth": int,
    "min_leaf_size": int,
    "boosting_rounds": int,
}
_MDE_SPEC = {"c": int, "n": int, "intv": float, "q_min": float, "q_max": float}
_HYB_SPEC = {
    "d": float,
    "alpha": float,
    "r": int,
    "p": int,
    "sample_fraction": float,
    "ci_alpha": float,
    "literal_flip": bool,
}
_CORR_SPEC = {"feature_index": int, "percentile": float, "extra_error": float}


def _estimator_configs(
    kv: dict[str, str], seed: int
) -> tuple[ClassifierConfig, MdeConfig, HybConfig]:
    lrn = _pop_group(kv, "learner", _LEARNER_SPEC)
    if lrn.get("algorithm") not in (None, FOREST, LOGITBOOST):
        raise ConfigError(
            f"config key 'learner.algorithm': expected {FOREST!r} or "
            f"{LOGITBOOST!r}, got {lrn['algorithm']!r}"
        )
    mde_kw = _pop_group(kv, "mde", _MDE_SPEC)
    hyb_kw = _pop_group(kv, "hyb", _HYB_SPEC)
    try:
        learner = ClassifierConfig(
            **lrn, seed=rngmod.derive_seed(seed, "learner")
        )
        mde_cfg = MdeConfig(**mde_kw, seed=rngmod.derive_seed(seed, "mde"))
        hyb_cfg = HybConfig(**hyb_kw, seed=rngmod.derive_seed(seed, "hyb"))
    except ValidationError as e:
        raise ConfigError(str(e)) from None
    return learner, mde_cfg, hyb_cfg


def _parse_profile(value: str) -> WorkerProfile:
    if "," not in value:
        return profile_by_name(value)
    try:
        accs = tuple(float(p) for p in value.split(","))
    except ValueError:
        raise ConfigError(f"config key 'profile': bad accuracy list {value!r}") from None
    try:
        return WorkerProfile(accs)
    except ValidationError as e:
        raise ConfigError(f"config key 'profile': {e}") from None


def _parse_int_list(key: str, value: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in value.split(","))
    except ValueError:
        raise ConfigError(f"config key {key!r}: bad integer list {value!r}") from None


def build_experiment_config(kv: dict[str, str]) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed `key = value` pairs."""
    kv = dict(kv)
    seed = _conv("master_seed", kv.pop("master_seed", "0"), int)
    learner, mde_cfg, hyb_cfg = _estimator_configs(kv, seed)

    corr_kw = _pop_group(kv, "correlated", _CORR_SPEC)
    corr_flag = kv.pop("correlated", None)
    correlated = None
    if corr_kw or (corr_flag is not None and _conv("correlated", corr_flag, bool)):
        try:
            correlated = CorrelatedSpec(**corr_kw)
        except ValidationError as e:
            raise ConfigError(str(e)) from None

    kw: dict = {
        "master_seed": seed,
        "learner": learner,
        "mde": mde_cfg,
        "hyb": hyb_cfg,
        "correlated": correlated,
    }
    if "corpus" in kv:
        kw["corpus"] = kv.pop("corpus")
    if "profile" in kv:
        kw["profile"] = _parse_profile(kv.pop("profile"))
    if "budgets" in kv:
        kw["budgets"] = _parse_int_list("budgets", kv.pop("budgets"))
    if "repetitions" in kv:
        kw["repetitions"] = _conv("repetitions", kv.pop("repetitions"), int)
    if "methods" in kv:
        kw["methods"] = tuple(
            m.strip() for m in kv.pop("methods").split(",") if m.strip()
        )
    if "reference" in kv:
        kw["reference"] = kv.pop("reference")
    if kv:
        raise ConfigError(f"unknown config key {sorted(kv)[0]!r}")
    try:
        return ExperimentConfig(**kw)
    except ValidationError as e:
        raise ConfigError(str(e)) from None


# ---------------------------------------------------------------- decisions io


def load_decisions_csv(
    path: str, gt_column: str = "gt_known"
) -> list[WorkerDecisionSet]:
    """Read a worker decisions CSV.

    Expected header: worker_id, instance_id, f0..f{D-1}, decision,
    <gt_column>, and optionally true_label. True labels are required on
    rows where the ground-truth flag is set.
    """
    try:
        text = Path(path).read_text(encoding="utf8")
    except OSError as e:
        raise DataFormatError(f"{path}: {e}") from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError(f"{path}: empty file") from None

    if len(header) < 5 or header[0] != "worker_id" or header[1] != "instance_id":
        raise DataFormatError(
            f"{path}: header must start with worker_id,instance_id,f0,..."
        )
    has_truth = header[-1] == "true_label"
    gt_pos = len(header) - (2 if has_truth else 1)
    dec_pos = gt_pos - 1
    if header[gt_pos] != gt_column:
        raise DataFormatError(
            f"{path}: expected ground-truth column {gt_column!r} at position "
            f"{gt_pos}, found {header[gt_pos]!r}"
        )
    if header[dec_pos] != "decision":
        raise DataFormatError(
            f"{path}: expected 'decision' column at position {dec_pos}, "
            f"found {header[dec_pos]!r}"
        )
    n_feat = dec_pos - 2
    expected = [f"f{j}" for j in range(n_feat)]
    if header[2:dec_pos] != expected or n_feat < 1:
        raise DataFormatError(
            f"{path}: feature columns must be f0..f{max(n_feat - 1, 0)} in order"
        )

    rows: dict[int, list] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataFormatError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        try:
            wid = int(row[0])
            iid = int(row[1])
            feats = [float(v) for v in row[2:dec_pos]]
            dec = int(row[dec_pos])
            flag = int(row[gt_pos])
        except ValueError as e:
            raise DataFormatError(f"{path}:{lineno}: {e}") from None
        if dec not in (0, 1) or flag not in (0, 1):
            raise DataFormatError(
                f"{path}:{lineno}: decision and {gt_column} must be 0 or 1"
            )
        truth = -1
        if has_truth and row[-1] != "":
            try:
                truth = int(row[-1])
            except ValueError as e:
                raise DataFormatError(f"{path}:{lineno}: {e}") from None
            if truth not in (0, 1):
                raise DataFormatError(f"{path}:{lineno}: true_label must be 0 or 1")
        if flag == 1 and truth == -1:
            raise DataFormatError(
                f"{path}:{lineno}: true_label required where {gt_column}=1"
            )
        rows.setdefault(wid, []).append((iid, feats, dec, flag, truth))

    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    workers = []
    for wid in sorted(rows):
        recs = rows[wid]
        workers.append(
            WorkerDecisionSet(
                worker_id=wid,
                instance_ids=np.array([r[0] for r in recs], dtype=np.int64),
                features=np.array([r[1] for r in recs], dtype=np.float64),
                true_labels=np.array([r[4] for r in recs], dtype=np.int8),
                decisions=np.array([r[2] for r in recs], dtype=np.int8),
                gt_known=np.array([bool(r[3]) for r in recs]),
            )
        )
    return workers


def dump_decisions_csv(
    workers: list[WorkerDecisionSet], include_true_labels: bool = True
) -> str:
    """Inverse of load_decisions_csv, mainly for exporting simulated cohorts."""
    if not workers:
        raise ValidationError("no workers to dump")
    n_feat = workers[0].features.shape[1]
    header = ["worker_id", "instance_id"] + [f"f{j}" for j in range(n_feat)]
    header += ["decision", "gt_known"]
    if include_true_labels:
        header.append("true_label")
    lines = [",".join(header)]
    for w in workers:
        for i in range(w.n):
            row = [str(w.worker_id), str(int(w.instance_ids[i]))]
            row += [f"{v:g}" for v in w.features[i]]
            row += [str(int(w.decisions[i])), str(int(w.gt_known[i]))]
            if include_true_labels:
                t = int(w.true_labels[i])
                row.append("" if t < 0 else str(t))
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def load_exclusive_csv(path: str) -> GroundTruthPool:
    """Read an exclusive ground-truth CSV: instance_id, f0..f{D-1}, label."""
    try:
        text = Path(path).read_text(encoding="utf8")
    except OSError as e:
        raise DataFormatError(f"{path}: {e}") from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError(f"{path}: empty file") from None
    n_feat = len(header) - 2
    expected = ["instance_id"] + [f"f{j}" for j in range(n_feat)] + ["label"]
    if n_feat < 1 or header != expected:
        raise DataFormatError(
            f"{path}: header must be instance_id,f0..f{{D-1}},label"
        )
    ids, feats, labels = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataFormatError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        try:
            ids.append(int(row[0]))
            feats.append([float(v) for v in row[1:-1]])
            lab = int(row[-1])
        except ValueError as e:
            raise DataFormatError(f"{path}:{lineno}: {e}") from None
        if lab not in (0, 1):
            raise DataFormatError(f"{path}:{lineno}: label must be 0 or 1")
        labels.append(lab)
    if not ids:
        raise DataFormatError(f"{path}: no data rows")
    m = len(ids)
    return GroundTruthPool(
        instance_ids=np.array(ids, dtype=np.int64),
        features=np.array(feats, dtype=np.float64),
        labels=np.array(labels, dtype=np.int8),
        origins=np.full(m, -1, dtype=np.int64),
        exclusive=True,
    )


# -------------------------------------------------------------------- assess


def _fmt(v: float | None) -> str:
    return "" if v is None else f"{v:.6f}"


def _estimates_csv(
    workers: list[WorkerDecisionSet],
    method: str,
    meta: dict[str, str],
    ear: list[float] | None = None,
    mde: list[float] | None = None,
    hyb: list[float] | None = None,
    decision=None,
) -> str:
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append("worker_id,ear,mde,hyb,branch,p_mde,p_ear")
    for i, w in enumerate(workers):
        branch = decision.branch if decision is not None else ""
        p_m = _fmt(decision.p_mde) if decision is not None else ""
        p_e = _fmt(decision.p_ear) if decision is not None else ""
        lines.append(
            f"{w.worker_id},{_fmt(ear[i] if ear else None)},"
            f"{_fmt(mde[i] if mde else None)},{_fmt(hyb[i] if hyb else None)},"
            f"{branch},{p_m},{p_e}"
        )
    return "\n".join(lines) + "\n"


def cmd_assess(args: argparse.Namespace) -> int:
    kv = parse_kv(Path(args.config).read_text(encoding="utf8")) if args.config else {}
    learner, mde_cfg, hyb_cfg = _estimator_configs(kv, args.seed)
    if kv:
        raise ConfigError(
            f"config key {sorted(kv)[0]!r} is not applicable to assess"
        )

    workers = load_decisions_csv(args.decisions, args.gt_flags)
    method = args.method
    pool = None
    if args.exclusive_gt is not None:
        if method not in (MDE_EXC, GM_GT, GM_ALL):
            raise ConfigError(
                f"--exclusive-gt applies to {MDE_EXC}, {GM_GT}, {GM_ALL} only"
            )
        pool = load_exclusive_csv(args.exclusive_gt)
    elif method == MDE_EXC:
        raise ConfigError(f"method {MDE_EXC} requires --exclusive-gt")

    meta = {
        "tool": f"dqest {__version__}",
        "backend": BACKEND,
        "method": method,
        "seed": str(args.seed),
        "workers": str(len(workers)),
        "records": str(sum(w.n for w in workers)),
        "learner": (
            f"{learner.algorithm} trees={learner.tree_count} "
            f"depth={learner.max_depth} min_leaf={learner.min_leaf_size} "
            f"rounds={learner.boosting_rounds}"
        ),
    }

    ear = mde = hyb = None
    decision = None
    if method == EAR:
        ear = [ear_estimate(w) for w in workers]
    elif method in (MDE, MDE_GM_ALL, MDE_SM_GT):
        mode = {MDE: None, MDE_GM_ALL: GLOBAL_ALL, MDE_SM_GT: GLOBAL_GT}[method]
        gt_pool = build_pool(workers)
        model = (
            fit_mde(workers, gt_pool, mde_cfg, learner)
            if mode is None
            else fit_mde(workers, gt_pool, mde_cfg, learner, mode=mode)
        )
        mde = [assess_worker(model, w) for w in workers]
    elif method == MDE_HYB:
        res = mde_hyb_full(workers, None, mde_cfg, learner, hyb_cfg)
        ear, mde, hyb = res.ear_estimates, res.mde_estimates, res.estimates
        decision = res.decision
    elif method == MDE_EXC:
        mde = mde_exclusive(
            workers, pool, mde_cfg, learner,
            rngmod.spawn(args.seed, "exclusive-share"),
        )
    elif method == GM_GT:
        mde = gm_gt_estimate(workers, learner, exclusive_pool=pool)
    elif method == GM_ALL:
        mde = gm_all_estimate(workers, learner, exclusive_pool=pool)

    out = _estimates_csv(workers, method, meta, ear, mde, hyb, decision)
    if args.out:
        Path(args.out).write_text(out, encoding="utf8")
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(out)
    return 0


# ---------------------------------------------------------------------- bench


def cmd_bench(args: argparse.Namespace) -> int:
    kv = parse_kv(Path(args.config).read_text(encoding="utf8"))
    if args.seed is not None:
        kv["master_seed"] = str(args.seed)
    if args.repetitions is not None:
        kv["repetitions"] = str(args.repetitions)
    if args.budgets is not None:
        kv["budgets"] = args.budgets
    config = build_experiment_config(kv)

    if args.dry_run:
        from dqest import corpora

        corpus = corpora.get_corpus(config.corpus)
        simharness._validate_budgets(config, corpus)
        print(
            f"config ok: corpus={config.corpus} ({len(corpus)} instances), "
            f"{len(config.profile)} workers, budgets={list(config.budgets)}, "
            f"{config.repetitions} repetitions, methods={list(config.methods)}"
        )
        return 0

    started = time.perf_counter()
    result = run_experiment(config, jobs=args.jobs)
    elapsed = time.perf_counter() - started

    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "result.csv": result_csv(result),
        "summary.csv": summary_csv(result),
        "summary.md": markdown_table(result),
    }
    for name, content in paths.items():
        (out_dir / name).write_text(content, encoding="utf8")
    for notice in result.notices:
        print(f"notice: {notice}", file=sys.stderr)
    print(f"wrote {', '.join(str(out_dir / n) for n in paths)}", file=sys.stderr)
    print(f"total wall time: {elapsed:.1f}s", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqest",
        description="Estimate decision accuracies from noisy binary decisions "
        "plus scarce ground truth.",
    )
    parser.add_argument("--version", action="version", version=f"dqest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_assess = sub.add_parser(
        "assess", help="estimate worker accuracies from a decisions CSV"
    )
    p_assess.add_argument("--decisions", required=True, help="decisions CSV path")
    p_assess.add_argument(
        "--gt-flags",
        default="gt_known",
        help="name of the column flagging ground-truth records",
    )
    p_assess.add_argument(
        "--exclusive-gt", help="exclusive ground-truth CSV (instance_id,f*,label)"
    )
    p_assess.add_argument("--method", required=True, choices=METHODS)
    p_assess.add_argument("--config", help="flat key = value estimator settings")
    p_assess.add_argument("--out", help="output path (default: stdout)")
    p_assess.add_argument("--seed", type=int, default=0)
    p_assess.set_defaults(func=cmd_assess)

    p_bench = sub.add_parser("bench", help="run a simulation benchmark sweep")
    p_bench.add_argument("--config", required=True, help="experiment config file")
    p_bench.add_argument("--out", help="output directory (default: current)")
    p_bench.add_argument("--seed", type=int, help="override master_seed")
    p_bench.add_argument(
        "--repetitions", type=int, help="override repetition count"
    )
    p_bench.add_argument("--budgets", help="override budgets, e.g. 5,10")
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument(
        "--dry-run", action="store_true", help="validate the config, run nothing"
    )
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DqError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
