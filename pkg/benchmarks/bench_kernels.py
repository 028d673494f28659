"""Time the compiled kernels against the pure-numpy twin.

Both backends are run on the same inputs; outputs are checked for bit
equality before any timing is reported, so a broken build fails loudly
instead of producing a meaningless table.

Usage:
    python benchmarks/bench_kernels.py [--rows N] [--features D]
        [--trees T] [--repeats R]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from dqest import _kernels_py


def _load_compiled():
    try:
        from dqest import _kernels
    except ImportError:
        return None
    return _kernels


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _check_equal(a, b, label):
    for i, (u, v) in enumerate(zip(a, b)):
        if not np.array_equal(np.asarray(u), np.asarray(v)):
            raise AssertionError(f"{label}: backend outputs differ at array {i}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--features", type=int, default=30)
    ap.add_argument("--trees", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=20240901)
    args = ap.parse_args(argv)

    compiled = _load_compiled()
    if compiled is None:
        print("compiled backend not importable; build it first "
              "(pip install -e . --no-build-isolation)", file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    X = rng.normal(size=(args.rows, args.features))
    w = rng.normal(size=args.features)
    y = ((X @ w + rng.normal(size=args.rows)) > 0).astype(np.int8)
    mtry = int(np.ceil(np.sqrt(args.features)))

    fit_args = (X, y, args.trees, 0, 1, mtry, args.seed)
    model_py = _kernels_py.forest_fit(*fit_args)
    model_c = compiled.forest_fit(*fit_args)
    _check_equal(model_py, model_c, "forest_fit")

    Xq = rng.normal(size=(args.rows, args.features))
    pred_py = _kernels_py.forest_predict(*model_py, Xq)
    pred_c = compiled.forest_predict(*model_c, Xq)
    _check_equal((pred_py,), (pred_c,), "forest_predict")

    # stump_scan inputs: presorted per-feature values plus boosting weights
    order = np.argsort(X, axis=0).T.astype(np.int32)
    xs = np.take_along_axis(X.T, order.astype(np.int64), axis=1)
    wgt = rng.random(args.rows) + 0.1
    z = rng.normal(size=args.rows)
    scan_args = (xs, order, wgt, z, float(wgt.sum()), float((wgt * z).sum()))
    if _kernels_py.stump_scan(*scan_args) != compiled.stump_scan(*scan_args):
        raise AssertionError("stump_scan: backend outputs differ")

    rows = [
        ("forest_fit", lambda: _kernels_py.forest_fit(*fit_args),
         lambda: compiled.forest_fit(*fit_args)),
        ("forest_predict", lambda: _kernels_py.forest_predict(*model_py, Xq),
         lambda: compiled.forest_predict(*model_c, Xq)),
        ("stump_scan", lambda: _kernels_py.stump_scan(*scan_args),
         lambda: compiled.stump_scan(*scan_args)),
    ]
    print(f"rows={args.rows} features={args.features} trees={args.trees} "
          f"(best of {args.repeats})")
    print(f"{'kernel':<16}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for name, py_fn, c_fn in rows:
        t_py = _time(py_fn, args.repeats)
        t_c = _time(c_fn, args.repeats)
        print(f"{name:<16}{t_py:>11.4f}s{t_c:>11.4f}s{t_py / t_c:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
