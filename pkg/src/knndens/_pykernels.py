"""Pure numpy twins of the compiled kernels in ``_ckernels``.

Signatures and distance arithmetic match the compiled module exactly; only
kernel sums may differ in the last bits because numpy reduces in a
different order.
"""

import numpy as np

KERNEL_BOX = 0
KERNEL_EPANECHNIKOV = 1

BACKEND = "python"

_CHUNK = 256


def _weight(d2, h2, kernel):
    if kernel == KERNEL_BOX:
        return np.ones_like(d2)
    return 1.0 - d2 / h2


# ---------------------------------------------------------------- d == 1

def _count_side(s, piv, avail, x, r2, left):
    lo = np.zeros_like(piv)
    hi = avail.copy()
    while True:
        active = lo < hi
        if not active.any():
            return lo
        mid = (lo + hi) >> 1
        if left:
            idx = np.where(active, piv - 1 - mid, 0)
            d2 = (x - s[idx]) ** 2
        else:
            idx = np.where(active, piv + mid, 0)
            idx = np.minimum(idx, s.shape[0] - 1)
            d2 = (s[idx] - x) ** 2
        ok = d2 <= r2
        lo = np.where(active & ok, mid + 1, lo)
        hi = np.where(active & ~ok, mid, hi)


def kth_sq_sorted(s, q, k):
    s = np.asarray(s, dtype=np.float64)
    x = np.asarray(q, dtype=np.float64)
    n = s.shape[0]
    piv = np.searchsorted(s, x, side="left").astype(np.intp)
    n_left = piv
    n_right = n - piv
    tlo = np.maximum(0, k - n_right)
    thi = np.minimum(k, n_left)
    last = n - 1
    while True:
        active = tlo < thi
        if not active.any():
            break
        t = (tlo + thi) >> 1
        valid = active & (t < n_left) & (k - t > 0)
        li = np.clip(piv - 1 - t, 0, last)
        ri = np.clip(piv + k - t - 1, 0, last)
        pred = valid & ((x - s[li]) ** 2 < (s[ri] - x) ** 2)
        tlo = np.where(active & pred, t + 1, tlo)
        thi = np.where(active & ~pred, t, thi)
    t = tlo
    lv = np.where(t > 0, (x - s[np.clip(piv - t, 0, last)]) ** 2, -1.0)
    rv = np.where(k - t > 0, (s[np.clip(piv + k - t - 1, 0, last)] - x) ** 2, -1.0)
    return np.maximum(lv, rv)


def count_sq_sorted(s, q, r2):
    s = np.asarray(s, dtype=np.float64)
    x = np.asarray(q, dtype=np.float64)
    piv = np.searchsorted(s, x, side="left").astype(np.intp)
    cl = _count_side(s, piv, piv, x, r2, True)
    cr = _count_side(s, piv, s.shape[0] - piv, x, r2, False)
    return (cl + cr).astype(np.int64)


def kernel_sum_sorted(s, q, h2, kernel):
    s = np.asarray(s, dtype=np.float64)
    x = np.asarray(q, dtype=np.float64)
    piv = np.searchsorted(s, x, side="left").astype(np.intp)
    cl = _count_side(s, piv, piv, x, h2, True)
    cr = _count_side(s, piv, s.shape[0] - piv, x, h2, False)
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        window = s[piv[i] - cl[i]:piv[i] + cr[i]]
        out[i] = _weight((window - x[i]) ** 2, h2, kernel).sum()
    return out


# ---------------------------------------------------------------- k-d tree
# The fallback ignores the tree and scans every point; results are the same.

def _d2_block(pts, q):
    d2 = np.zeros((q.shape[0], pts.shape[0]))
    for a in range(pts.shape[1]):
        d2 += (pts[None, :, a] - q[:, None, a]) ** 2
    return d2


def kth_sq_tree(pts, start, end, left, right, lo, hi, q, k):
    out = np.empty(q.shape[0])
    for i in range(0, q.shape[0], _CHUNK):
        d2 = _d2_block(pts, q[i:i + _CHUNK])
        out[i:i + _CHUNK] = np.partition(d2, k - 1, axis=1)[:, k - 1]
    return out


def count_sq_tree(pts, start, end, left, right, lo, hi, q, r2):
    out = np.empty(q.shape[0], dtype=np.int64)
    for i in range(0, q.shape[0], _CHUNK):
        out[i:i + _CHUNK] = (_d2_block(pts, q[i:i + _CHUNK]) <= r2).sum(axis=1)
    return out


def kernel_sum_tree(pts, start, end, left, right, lo, hi, q, h2, kernel):
    out = np.empty(q.shape[0])
    for i in range(0, q.shape[0], _CHUNK):
        d2 = _d2_block(pts, q[i:i + _CHUNK])
        out[i:i + _CHUNK] = np.where(d2 <= h2, _weight(d2, h2, kernel), 0.0).sum(axis=1)
    return out


# ---------------------------------------------------------------- QMC

def chord_mean(u, zlo, zhi, tlo, thi, n0, rtol):
    big_m, e = u.shape
    out = np.empty(zlo.shape[0])
    for i in range(zlo.shape[0]):
        q = np.ones(big_m)
        for a in range(e):
            z = zlo[i, a] + u[:, a] * (zhi[i, a] - zlo[i, a])
            q = q - z * z
        s = np.sqrt(np.where(q > 0.0, q, 0.0))
        chord = np.minimum(thi[i], s) - np.maximum(tlo[i], -s)
        chord = np.where((q > 0.0) & (chord > 0.0), chord, 0.0)
        # running sums in index order, as the compiled loop accumulates
        totals = np.cumsum(chord)
        ncur = min(n0, big_m)
        prev = totals[ncur - 1] / ncur
        while ncur < big_m:
            ncur = min(2 * ncur, big_m)
            est = totals[ncur - 1] / ncur
            if abs(est - prev) < rtol * est or (est == 0.0 and prev == 0.0):
                break
            prev = est
        out[i] = totals[ncur - 1] / ncur
    return out
