# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels.

Mirrors `dqest._kernels_py` operation for operation: same splitmix64 stream,
same pre-order node numbering, same exact integer split comparisons, same
float expression order in the stump scan. Any change here must be made there
as well; tests assert the two backends agree bit for bit.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy

cnp.import_array()

BACKEND = "compiled"

ctypedef unsigned long long u64
ctypedef long long i64

cdef extern from *:
    ctypedef long long i128 "__int128"

cdef u64 GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline u64 _mix(u64* state) noexcept nogil:
    state[0] = state[0] + GAMMA
    cdef u64 z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef struct Pair:
    double v
    i64 lab


cdef void _ins_sort(Pair* a, i64 n) noexcept nogil:
    cdef i64 i, j
    cdef Pair key
    for i in range(1, n):
        key = a[i]
        j = i - 1
        while j >= 0 and a[j].v > key.v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


cdef void _sort_pairs(Pair* a, i64 lo, i64 hi) noexcept nogil:
    """Sort a[lo:hi) ascending by value (quicksort, insertion base case).

    Only the order of values matters downstream; ties may land in any order.
    """
    cdef i64 n, mid, i, j
    cdef double pivot
    cdef Pair tmp
    while True:
        n = hi - lo
        if n <= 24:
            _ins_sort(a + lo, n)
            return
        mid = lo + n // 2
        if a[mid].v < a[lo].v:
            tmp = a[mid]; a[mid] = a[lo]; a[lo] = tmp
        if a[hi - 1].v < a[lo].v:
            tmp = a[hi - 1]; a[hi - 1] = a[lo]; a[lo] = tmp
        if a[hi - 1].v < a[mid].v:
            tmp = a[hi - 1]; a[hi - 1] = a[mid]; a[mid] = tmp
        pivot = a[mid].v
        i = lo - 1
        j = hi
        while True:
            i += 1
            while a[i].v < pivot:
                i += 1
            j -= 1
            while a[j].v > pivot:
                j -= 1
            if i >= j:
                break
            tmp = a[i]; a[i] = a[j]; a[j] = tmp
        # recurse into the smaller side, iterate on the larger
        if j + 1 - lo <= hi - (j + 1):
            _sort_pairs(a, lo, j + 1)
            lo = j + 1
        else:
            _sort_pairs(a, j + 1, hi)
            hi = j + 1


cdef struct NodeBuf:
    int* feature
    double* thresh
    int* left
    int* right
    double* p1
    i64 size
    i64 cap


cdef int _buf_grow(NodeBuf* b) noexcept nogil:
    cdef i64 cap = b.cap * 2 if b.cap > 0 else 1024
    b.feature = <int*> realloc(b.feature, cap * sizeof(int))
    b.thresh = <double*> realloc(b.thresh, cap * sizeof(double))
    b.left = <int*> realloc(b.left, cap * sizeof(int))
    b.right = <int*> realloc(b.right, cap * sizeof(int))
    b.p1 = <double*> realloc(b.p1, cap * sizeof(double))
    if (b.feature == NULL or b.thresh == NULL or b.left == NULL
            or b.right == NULL or b.p1 == NULL):
        return -1
    b.cap = cap
    return 0


cdef inline i64 _buf_push(NodeBuf* b, int feature, double thresh, double p1) noexcept nogil:
    if b.size == b.cap:
        if _buf_grow(b) < 0:
            return -1
    cdef i64 nid = b.size
    b.feature[nid] = feature
    b.thresh[nid] = thresh
    b.left[nid] = -1
    b.right[nid] = -1
    b.p1[nid] = p1
    b.size = nid + 1
    return nid


cdef struct Frame:
    i64 lo
    i64 hi
    int depth
    i64 parent
    int is_left


cdef i64 _grow_tree(
    const double[:, ::1] Xt,
    const signed char[::1] y,
    i64 m,
    int n_feat,
    int max_depth,
    int min_leaf,
    int mtry,
    u64* state,
    NodeBuf* buf,
    i64* samp,
    Pair* pairs,
    int* arr,
    Frame** stack_p,
    i64* stack_cap,
) noexcept nogil:
    """Grow one tree over samp[0:m]; returns 0, or -1 on allocation failure."""
    cdef Frame* stack = stack_p[0]
    cdef i64 sp = 0
    cdef Frame fr
    cdef i64 lo, hi, n, c1, j, i, nid, nl_total
    cdef int depth, f, ci, best_f, take
    cdef i64 c1l, c0l, c1r, c0r, nl, nr, sql, sqr, num, den
    cdef i64 fb_num, fb_den, best_num, best_den
    cdef double fb_thr, best_thr, thr
    cdef i128 cmp
    cdef u64 r
    cdef int pure, forced, have_split
    cdef i64 tmp

    stack[0].lo = 0
    stack[0].hi = m
    stack[0].depth = 0
    stack[0].parent = -1
    stack[0].is_left = 0
    sp = 1

    while sp > 0:
        sp -= 1
        fr = stack[sp]
        lo = fr.lo
        hi = fr.hi
        depth = fr.depth
        n = hi - lo

        c1 = 0
        for j in range(lo, hi):
            c1 += y[samp[j]]
        pure = 1 if (c1 == 0 or c1 == n) else 0
        forced = pure or n < 2 * min_leaf or (max_depth > 0 and depth >= max_depth)

        have_split = 0
        best_f = -1
        best_num = -1
        best_den = 1
        best_thr = 0.0
        if not forced:
            for i in range(n_feat):
                arr[i] = i
            for i in range(mtry):
                r = _mix(state)
                j = i + <i64> (r % <u64> (n_feat - i))
                tmp = arr[i]
                arr[i] = arr[<int> j]
                arr[<int> j] = <int> tmp
            for ci in range(mtry):
                f = arr[ci]
                for j in range(n):
                    pairs[j].v = Xt[f, samp[lo + j]]
                    pairs[j].lab = y[samp[lo + j]]
                _sort_pairs(pairs, 0, n)
                c1l = 0
                fb_num = -1
                fb_den = 1
                fb_thr = 0.0
                for i in range(n - 1):
                    c1l += pairs[i].lab
                    nl = i + 1
                    nr = n - nl
                    if pairs[i].v < pairs[i + 1].v and nl >= min_leaf and nr >= min_leaf:
                        c0l = nl - c1l
                        c1r = c1 - c1l
                        c0r = nr - c1r
                        sql = c0l * c0l + c1l * c1l
                        sqr = c0r * c0r + c1r * c1r
                        num = sql * nr + sqr * nl
                        den = nl * nr
                        if <i128> num * fb_den > <i128> fb_num * den:
                            fb_num = num
                            fb_den = den
                            fb_thr = (pairs[i].v + pairs[i + 1].v) / 2.0
                if fb_num >= 0:
                    cmp = <i128> fb_num * best_den - <i128> best_num * fb_den
                    if cmp > 0 or (cmp == 0 and f < best_f):
                        best_num = fb_num
                        best_den = fb_den
                        best_f = f
                        best_thr = fb_thr
            if best_f >= 0:
                have_split = 1

        if not have_split:
            nid = _buf_push(buf, -1, 0.0, (c1 + 1.0) / (n + 2.0))
        else:
            nid = _buf_push(buf, best_f, best_thr, 0.0)
        if nid < 0:
            return -1
        if fr.parent >= 0:
            if fr.is_left:
                buf.left[fr.parent] = <int> nid
            else:
                buf.right[fr.parent] = <int> nid

        if have_split:
            thr = best_thr
            i = lo
            j = hi - 1
            while i <= j:
                if Xt[best_f, samp[i]] <= thr:
                    i += 1
                else:
                    tmp = samp[i]
                    samp[i] = samp[j]
                    samp[j] = tmp
                    j -= 1
            nl_total = i - lo
            if sp + 2 > stack_cap[0]:
                stack_cap[0] = stack_cap[0] * 2
                stack = <Frame*> realloc(stack, stack_cap[0] * sizeof(Frame))
                if stack == NULL:
                    return -1
                stack_p[0] = stack
            stack[sp].lo = lo + nl_total
            stack[sp].hi = hi
            stack[sp].depth = depth + 1
            stack[sp].parent = nid
            stack[sp].is_left = 0
            sp += 1
            stack[sp].lo = lo
            stack[sp].hi = lo + nl_total
            stack[sp].depth = depth + 1
            stack[sp].parent = nid
            stack[sp].is_left = 1
            sp += 1
    return 0


def forest_fit(X, y, int n_trees, int max_depth, int min_leaf, int mtry, seed):
    """Fit a random forest; returns flat node arrays plus per-tree offsets."""
    # transposed copy: per-feature gathers walk contiguous memory
    cdef const double[:, ::1] Xv = np.ascontiguousarray(
        np.asarray(X, dtype=np.float64).T)
    cdef const signed char[::1] yv = np.ascontiguousarray(y, dtype=np.int8)
    cdef i64 m = Xv.shape[1]
    cdef int n_feat = <int> Xv.shape[0]
    cdef u64 seed64 = <u64> (<object> seed & 0xFFFFFFFFFFFFFFFF)

    cdef NodeBuf buf
    buf.feature = NULL
    buf.thresh = NULL
    buf.left = NULL
    buf.right = NULL
    buf.p1 = NULL
    buf.size = 0
    buf.cap = 0

    offsets = np.empty(n_trees + 1, dtype=np.int64)
    cdef i64[::1] off = offsets
    off[0] = 0

    cdef i64* samp = <i64*> malloc(m * sizeof(i64))
    cdef Pair* pairs = <Pair*> malloc(m * sizeof(Pair))
    cdef int* arr = <int*> malloc(n_feat * sizeof(int))
    cdef i64 stack_cap = 1024
    cdef Frame* stack = <Frame*> malloc(stack_cap * sizeof(Frame))
    cdef u64 state
    cdef i64 j
    cdef int t, rc = 0
    if samp == NULL or pairs == NULL or arr == NULL or stack == NULL:
        rc = -1

    if rc == 0:
        with nogil:
            for t in range(n_trees):
                # scramble the start state so trees do not share one Weyl
                # progression (keep in sync with the pure twin)
                state = seed64 + GAMMA * <u64> t
                state = _mix(&state)
                for j in range(m):
                    samp[j] = <i64> (_mix(&state) % <u64> m)
                if _grow_tree(Xv, yv, m, n_feat, max_depth, min_leaf, mtry,
                              &state, &buf, samp, pairs, arr, &stack, &stack_cap) < 0:
                    rc = -1
                    break
                off[t + 1] = buf.size

    free(samp)
    free(pairs)
    free(arr)
    free(stack)
    if rc < 0:
        free(buf.feature)
        free(buf.thresh)
        free(buf.left)
        free(buf.right)
        free(buf.p1)
        raise MemoryError("forest_fit: allocation failed")

    feature = np.empty(buf.size, dtype=np.int32)
    thresh = np.empty(buf.size, dtype=np.float64)
    left = np.empty(buf.size, dtype=np.int32)
    right = np.empty(buf.size, dtype=np.int32)
    leaf_p1 = np.empty(buf.size, dtype=np.float64)
    cdef int[::1] fv = feature
    cdef double[::1] tv = thresh
    cdef int[::1] lv = left
    cdef int[::1] rv = right
    cdef double[::1] pv = leaf_p1
    if buf.size > 0:
        memcpy(&fv[0], buf.feature, buf.size * sizeof(int))
        memcpy(&tv[0], buf.thresh, buf.size * sizeof(double))
        memcpy(&lv[0], buf.left, buf.size * sizeof(int))
        memcpy(&rv[0], buf.right, buf.size * sizeof(int))
        memcpy(&pv[0], buf.p1, buf.size * sizeof(double))
    free(buf.feature)
    free(buf.thresh)
    free(buf.left)
    free(buf.right)
    free(buf.p1)
    return feature, thresh, left, right, leaf_p1, offsets


def forest_predict(feature, thresh, left, right, leaf_p1, offsets, X):
    """Mean smoothed leaf probability of class 1 across trees."""
    cdef const int[::1] fv = np.ascontiguousarray(feature, dtype=np.int32)
    cdef const double[::1] tv = np.ascontiguousarray(thresh, dtype=np.float64)
    cdef const int[::1] lv = np.ascontiguousarray(left, dtype=np.int32)
    cdef const int[::1] rv = np.ascontiguousarray(right, dtype=np.int32)
    cdef const double[::1] pv = np.ascontiguousarray(leaf_p1, dtype=np.float64)
    cdef const i64[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef i64 n = Xv.shape[0]
    cdef int n_trees = <int> (off.shape[0] - 1)
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef i64 i, pos
    cdef int t
    with nogil:
        for t in range(n_trees):
            for i in range(n):
                pos = off[t]
                while fv[pos] >= 0:
                    if Xv[i, fv[pos]] <= tv[pos]:
                        pos = lv[pos]
                    else:
                        pos = rv[pos]
                ov[i] += pv[pos]
        for i in range(n):
            ov[i] /= n_trees
    return out


def stump_scan(xs, order, w, z, double w_tot, double wz_tot):
    """Weighted least-squares regression stump over presorted features.

    Same contract as the pure version: returns (feature, threshold,
    left_value, right_value), feature -1 when no boundary exists.
    """
    cdef const double[:, ::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const int[:, ::1] ov = np.ascontiguousarray(order, dtype=np.int32)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef int D = <int> xv.shape[0]
    cdef i64 m = xv.shape[1]
    cdef double best_score = -np.inf
    cdef int best_f = -1
    cdef double best_thr = 0.0, best_cl = 0.0, best_cr = 0.0
    cdef int f
    cdef i64 i, k
    cdef double cw, cwz, wval, wl, wzl, wr, wzr, score
    with nogil:
        for f in range(D):
            cw = 0.0
            cwz = 0.0
            for i in range(m - 1):
                k = ov[f, i]
                wval = wv[k]
                cw = cw + wval
                cwz = cwz + wval * zv[k]
                if xv[f, i] < xv[f, i + 1]:
                    wl = cw
                    wzl = cwz
                    wr = w_tot - wl
                    wzr = wz_tot - wzl
                    score = (wzl * wzl) / wl + (wzr * wzr) / wr
                    if score > best_score:
                        best_score = score
                        best_f = f
                        best_thr = (xv[f, i] + xv[f, i + 1]) / 2.0
                        best_cl = wzl / wl
                        best_cr = wzr / wr
    if best_f < 0:
        return -1, 0.0, 0.0, 0.0
    return best_f, best_thr, best_cl, best_cr
