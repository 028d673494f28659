"""Pure-numpy kernels: reference implementation of the hot loops.

The compiled extension (`dqest._kernels`) mirrors these routines exactly.
Both consume randomness through the same splitmix64 stream and compare split
qualities in exact integer arithmetic, so the two backends produce identical
trees and identical probabilities. Keep the two files in sync.

Forest trees are stored as flat parallel arrays (one block per tree, offsets
marking block starts): `feature` holds -1 for leaves, `leaf_p1` the smoothed
class-1 probability (c1 + 1) / (n + 2).
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15

BACKEND = "python"


def _mix(state: int) -> tuple[int, int]:
    state = (state + _GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, (z ^ (z >> 31)) & MASK64


class _TreeAccum:
    """Growable flat node storage shared by all trees of one forest."""

    def __init__(self) -> None:
        self.feature: list[int] = []
        self.thresh: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_p1: list[float] = []

    def add(self, feature: int, thresh: float, p1: float) -> int:
        nid = len(self.feature)
        self.feature.append(feature)
        self.thresh.append(thresh)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_p1.append(p1)
        return nid


def _best_split_for_feature(
    vals: np.ndarray, labels: np.ndarray, min_leaf: int
) -> tuple[int, int, float] | None:
    """Best boundary for one feature, as (quality_num, quality_den, thresh).

    Quality is sq_l/n_l + sq_r/n_r with sq = c0^2 + c1^2, larger is better;
    returned as an exact integer fraction so callers can compare candidates
    without float ties. Ties on quality pick the lowest threshold.
    """
    n = vals.shape[0]
    order = np.argsort(vals, kind="quicksort")
    sv = vals[order]
    sl = labels[order].astype(np.int64)

    boundary = sv[:-1] < sv[1:]
    n_l = np.arange(1, n, dtype=np.int64)
    n_r = n - n_l
    ok = boundary & (n_l >= min_leaf) & (n_r >= min_leaf)
    if not ok.any():
        return None

    c1_l = np.cumsum(sl)[:-1]
    c0_l = n_l - c1_l
    c1_r = sl.sum() - c1_l
    c0_r = n_r - c1_r
    sq_l = c0_l * c0_l + c1_l * c1_l
    sq_r = c0_r * c0_r + c1_r * c1_r
    num = sq_l * n_r + sq_r * n_l
    den = n_l * n_r

    score = np.where(ok, num / den, -np.inf)
    top = score.max()
    # shortlist near-maximal candidates, then settle exactly in integers
    cand = np.flatnonzero(score >= top - 1e-9 * abs(top) - 1e-30)
    best = None
    for i in cand:
        q = (int(num[i]), int(den[i]))
        if best is None or q[0] * best[1] > best[0] * q[1]:
            thr = (float(sv[i]) + float(sv[i + 1])) / 2.0
            best = (q[0], q[1], thr)
    return best


def forest_fit(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int,
    max_depth: int,
    min_leaf: int,
    mtry: int,
    seed: int,
) -> tuple[np.ndarray, ...]:
    """Fit a random forest; returns flat node arrays plus per-tree offsets."""
    m, n_feat = X.shape
    acc = _TreeAccum()
    offsets = np.empty(n_trees + 1, dtype=np.int64)
    offsets[0] = 0
    yi = y.astype(np.int64)

    for t in range(n_trees):
        # scramble the start state: raw (seed + GAMMA*t) values lie on one
        # shared Weyl progression, which would hand every tree a near-copy
        # of the same bootstrap draws
        _, state = _mix((seed + _GAMMA * t) & MASK64)
        idx = np.empty(m, dtype=np.int64)
        for j in range(m):
            state, r = _mix(state)
            idx[j] = r % m

        # stack of (segment, depth, parent, is_left); right pushed first so
        # the left subtree is numbered before the right (pre-order)
        stack: list[tuple[np.ndarray, int, int, bool]] = [(idx, 0, -1, False)]
        while stack:
            seg, depth, parent, is_left = stack.pop()
            n = seg.shape[0]
            c1 = int(yi[seg].sum())
            pure = c1 == 0 or c1 == n
            forced = pure or n < 2 * min_leaf or (max_depth > 0 and depth >= max_depth)

            split = None
            if not forced:
                arr = list(range(n_feat))
                chosen = []
                for i in range(mtry):
                    state, r = _mix(state)
                    j = i + r % (n_feat - i)
                    arr[i], arr[j] = arr[j], arr[i]
                    chosen.append(arr[i])
                best = None  # (num, den, feat, thr)
                for f in chosen:
                    got = _best_split_for_feature(X[seg, f], yi[seg], min_leaf)
                    if got is None:
                        continue
                    num, den, thr = got
                    if (
                        best is None
                        or num * best[1] > best[0] * den
                        or (num * best[1] == best[0] * den and f < best[2])
                    ):
                        best = (num, den, f, thr)
                if best is not None:
                    split = (best[2], best[3])

            if split is None:
                nid = acc.add(-1, 0.0, (c1 + 1.0) / (n + 2.0))
            else:
                f, thr = split
                nid = acc.add(f, thr, 0.0)
                go_left = X[seg, f] <= thr
                stack.append((seg[~go_left], depth + 1, nid, False))
                stack.append((seg[go_left], depth + 1, nid, True))

            if parent >= 0:
                if is_left:
                    acc.left[parent] = nid
                else:
                    acc.right[parent] = nid
        offsets[t + 1] = len(acc.feature)

    return (
        np.asarray(acc.feature, dtype=np.int32),
        np.asarray(acc.thresh, dtype=np.float64),
        np.asarray(acc.left, dtype=np.int32),
        np.asarray(acc.right, dtype=np.int32),
        np.asarray(acc.leaf_p1, dtype=np.float64),
        offsets,
    )


def forest_predict(
    feature: np.ndarray,
    thresh: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    leaf_p1: np.ndarray,
    offsets: np.ndarray,
    X: np.ndarray,
) -> np.ndarray:
    """Mean smoothed leaf probability of class 1 across trees."""
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    rows = np.arange(n)
    for t in range(n_trees):
        pos = np.full(n, offsets[t], dtype=np.int64)
        while True:
            feat = feature[pos]
            active = feat >= 0
            if not active.any():
                break
            r = rows[active]
            p = pos[active]
            go_left = X[r, feat[active]] <= thresh[p]
            pos[active] = np.where(go_left, left[p], right[p])
        out += leaf_p1[pos]
    return out / n_trees


def stump_scan(
    xs: np.ndarray,
    order: np.ndarray,
    w: np.ndarray,
    z: np.ndarray,
    w_tot: float,
    wz_tot: float,
) -> tuple[int, float, float, float]:
    """Weighted least-squares regression stump over presorted features.

    xs[f] holds feature f's values in ascending order, order[f] the matching
    row permutation. Returns (feature, threshold, left_value, right_value);
    feature is -1 when no feature admits a boundary between distinct values.
    Ties on score pick the lowest feature index, then the lowest threshold.
    """
    wf = w[order]
    zf = z[order]
    cw = np.cumsum(wf, axis=1)
    cwz = np.cumsum(wf * zf, axis=1)

    w_l = cw[:, :-1]
    wz_l = cwz[:, :-1]
    w_r = w_tot - w_l
    wz_r = wz_tot - wz_l
    score = (wz_l * wz_l) / w_l + (wz_r * wz_r) / w_r
    valid = xs[:, :-1] < xs[:, 1:]
    if not valid.any():
        return -1, 0.0, 0.0, 0.0

    flat = np.where(valid, score, -np.inf).ravel()
    k = int(np.argmax(flat))
    f, i = divmod(k, xs.shape[1] - 1)
    thr = (xs[f, i] + xs[f, i + 1]) / 2.0
    return f, float(thr), float(wz_l[f, i] / w_l[f, i]), float(wz_r[f, i] / w_r[f, i])
