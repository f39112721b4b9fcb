# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for neighbor queries, kernel sums and QMC chord means.

Every routine here has a numpy twin in ``_pykernels`` with the same
signature. Distances are compared squared, accumulated axis by axis in
index order starting from 0.0, so both backends (and the brute-force
oracle) see bit-identical distance values.
"""

import numpy as np

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc

KERNEL_BOX = 0
KERNEL_EPANECHNIKOV = 1

BACKEND = "cython"


cdef inline double _weight(double d2, double h2, int kernel) noexcept nogil:
    if kernel == 0:
        return 1.0
    return 1.0 - d2 / h2


cdef inline double _sq(double v) noexcept nogil:
    return v * v


# ---------------------------------------------------------------- d == 1

cdef inline Py_ssize_t _bisect_left(const double* s, Py_ssize_t n, double x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if s[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _count_side(const double* s, Py_ssize_t pivot, Py_ssize_t avail,
                                   double x, double r2, int left) noexcept nogil:
    # number of j < avail whose squared distance to x is <= r2; distances grow with j
    cdef Py_ssize_t lo = 0, hi = avail, mid
    cdef double d2
    while lo < hi:
        mid = (lo + hi) >> 1
        if left:
            d2 = _sq(x - s[pivot - 1 - mid])
        else:
            d2 = _sq(s[pivot + mid] - x)
        if d2 <= r2:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef double _kth_sorted_one(const double* s, Py_ssize_t n, double x, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t piv = _bisect_left(s, n, x)
    cdef Py_ssize_t n_left = piv, n_right = n - piv
    cdef Py_ssize_t tlo = k - n_right, thi = k
    cdef Py_ssize_t t
    cdef double lv, rv
    if tlo < 0:
        tlo = 0
    if thi > n_left:
        thi = n_left
    # smallest t such that taking t from the left and k - t from the right is a valid split
    while tlo < thi:
        t = (tlo + thi) >> 1
        if t < n_left and k - t > 0 and _sq(x - s[piv - 1 - t]) < _sq(s[piv + k - t - 1] - x):
            tlo = t + 1
        else:
            thi = t
    t = tlo
    lv = -1.0
    rv = -1.0
    if t > 0:
        lv = _sq(x - s[piv - t])
    if k - t > 0:
        rv = _sq(s[piv + k - t - 1] - x)
    return lv if lv > rv else rv


def kth_sq_sorted(const double[::1] s, const double[::1] q, Py_ssize_t k):
    cdef Py_ssize_t n = s.shape[0], m = q.shape[0], i
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            o[i] = _kth_sorted_one(&s[0], n, q[i], k)
    return out


def count_sq_sorted(const double[::1] s, const double[::1] q, double r2):
    cdef Py_ssize_t n = s.shape[0], m = q.shape[0], i, piv
    out = np.empty(m, dtype=np.int64)
    cdef long long[::1] o = out
    with nogil:
        for i in range(m):
            piv = _bisect_left(&s[0], n, q[i])
            o[i] = (_count_side(&s[0], piv, piv, q[i], r2, 1)
                    + _count_side(&s[0], piv, n - piv, q[i], r2, 0))
    return out


def kernel_sum_sorted(const double[::1] s, const double[::1] q, double h2, int kernel):
    cdef Py_ssize_t n = s.shape[0], m = q.shape[0], i, j, piv, cl, cr
    cdef double acc, x
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            x = q[i]
            piv = _bisect_left(&s[0], n, x)
            cl = _count_side(&s[0], piv, piv, x, h2, 1)
            cr = _count_side(&s[0], piv, n - piv, x, h2, 0)
            acc = 0.0
            for j in range(piv - cl, piv + cr):
                acc = acc + _weight(_sq(s[j] - x), h2, kernel)
            o[i] = acc
    return out


# ---------------------------------------------------------------- k-d tree

cdef inline double _point_d2(const double* p, const double* x, Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t a
    for a in range(d):
        acc = acc + _sq(p[a] - x[a])
    return acc


cdef inline double _box_lb(const double* lo, const double* hi, const double* x, Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0, g
    cdef Py_ssize_t a
    for a in range(d):
        if x[a] < lo[a]:
            g = lo[a] - x[a]
        elif x[a] > hi[a]:
            g = x[a] - hi[a]
        else:
            g = 0.0
        acc = acc + g * g
    return acc


cdef inline double _box_ub(const double* lo, const double* hi, const double* x, Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0, g1, g2
    cdef Py_ssize_t a
    for a in range(d):
        g1 = fabs(x[a] - lo[a])
        g2 = fabs(hi[a] - x[a])
        if g2 > g1:
            g1 = g2
        acc = acc + g1 * g1
    return acc


cdef inline void _heap_push(double* h, Py_ssize_t size, double v) noexcept nogil:
    cdef Py_ssize_t i = size, p
    while i > 0:
        p = (i - 1) >> 1
        if h[p] >= v:
            break
        h[i] = h[p]
        i = p
    h[i] = v


cdef inline void _heap_replace_top(double* h, Py_ssize_t k, double v) noexcept nogil:
    cdef Py_ssize_t i = 0, c
    while True:
        c = 2 * i + 1
        if c >= k:
            break
        if c + 1 < k and h[c + 1] > h[c]:
            c += 1
        if h[c] <= v:
            break
        h[i] = h[c]
        i = c
    h[i] = v


def kth_sq_tree(const double[:, ::1] pts, const Py_ssize_t[::1] start, const Py_ssize_t[::1] end,
                const Py_ssize_t[::1] left, const Py_ssize_t[::1] right,
                const double[:, ::1] lo, const double[:, ::1] hi,
                const double[:, ::1] q, Py_ssize_t k):
    cdef Py_ssize_t d = pts.shape[1], m = q.shape[0], n_nodes = start.shape[0]
    cdef Py_ssize_t i, j, sp, node, size, a, b
    cdef double d2, la, lb
    cdef const double* x
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef double* heap = <double*> malloc(k * sizeof(double))
    cdef Py_ssize_t* stack = <Py_ssize_t*> malloc((n_nodes + 2) * sizeof(Py_ssize_t))
    if heap == NULL or stack == NULL:
        free(heap)
        free(stack)
        raise MemoryError()
    with nogil:
        for i in range(m):
            x = &q[i, 0]
            size = 0
            stack[0] = 0
            sp = 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                if size == k and _box_lb(&lo[node, 0], &hi[node, 0], x, d) >= heap[0]:
                    continue
                if left[node] < 0:
                    for j in range(start[node], end[node]):
                        d2 = _point_d2(&pts[j, 0], x, d)
                        if size < k:
                            _heap_push(heap, size, d2)
                            size += 1
                        elif d2 < heap[0]:
                            _heap_replace_top(heap, k, d2)
                else:
                    a = left[node]
                    b = right[node]
                    la = _box_lb(&lo[a, 0], &hi[a, 0], x, d)
                    lb = _box_lb(&lo[b, 0], &hi[b, 0], x, d)
                    # nearer child is popped first
                    if la <= lb:
                        stack[sp] = b
                        stack[sp + 1] = a
                    else:
                        stack[sp] = a
                        stack[sp + 1] = b
                    sp += 2
            o[i] = heap[0]
    free(heap)
    free(stack)
    return out


def count_sq_tree(const double[:, ::1] pts, const Py_ssize_t[::1] start, const Py_ssize_t[::1] end,
                  const Py_ssize_t[::1] left, const Py_ssize_t[::1] right,
                  const double[:, ::1] lo, const double[:, ::1] hi,
                  const double[:, ::1] q, double r2):
    cdef Py_ssize_t d = pts.shape[1], m = q.shape[0], n_nodes = start.shape[0]
    cdef Py_ssize_t i, j, sp, node
    cdef long long cnt
    cdef const double* x
    out = np.empty(m, dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t* stack = <Py_ssize_t*> malloc((n_nodes + 2) * sizeof(Py_ssize_t))
    if stack == NULL:
        raise MemoryError()
    with nogil:
        for i in range(m):
            x = &q[i, 0]
            cnt = 0
            stack[0] = 0
            sp = 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                if _box_lb(&lo[node, 0], &hi[node, 0], x, d) > r2:
                    continue
                if _box_ub(&lo[node, 0], &hi[node, 0], x, d) <= r2:
                    cnt += end[node] - start[node]
                elif left[node] < 0:
                    for j in range(start[node], end[node]):
                        if _point_d2(&pts[j, 0], x, d) <= r2:
                            cnt += 1
                else:
                    stack[sp] = right[node]
                    stack[sp + 1] = left[node]
                    sp += 2
            o[i] = cnt
    free(stack)
    return out


def kernel_sum_tree(const double[:, ::1] pts, const Py_ssize_t[::1] start, const Py_ssize_t[::1] end,
                    const Py_ssize_t[::1] left, const Py_ssize_t[::1] right,
                    const double[:, ::1] lo, const double[:, ::1] hi,
                    const double[:, ::1] q, double h2, int kernel):
    cdef Py_ssize_t d = pts.shape[1], m = q.shape[0], n_nodes = start.shape[0]
    cdef Py_ssize_t i, j, sp, node
    cdef double acc, d2
    cdef const double* x
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t* stack = <Py_ssize_t*> malloc((n_nodes + 2) * sizeof(Py_ssize_t))
    if stack == NULL:
        raise MemoryError()
    with nogil:
        for i in range(m):
            x = &q[i, 0]
            acc = 0.0
            stack[0] = 0
            sp = 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                if _box_lb(&lo[node, 0], &hi[node, 0], x, d) > h2:
                    continue
                if left[node] < 0:
                    for j in range(start[node], end[node]):
                        d2 = _point_d2(&pts[j, 0], x, d)
                        if d2 <= h2:
                            acc = acc + _weight(d2, h2, kernel)
                else:
                    stack[sp] = right[node]
                    stack[sp + 1] = left[node]
                    sp += 2
            o[i] = acc
    free(stack)
    return out


# ---------------------------------------------------------------- QMC

def chord_mean(const double[:, ::1] u, const double[:, ::1] zlo, const double[:, ::1] zhi,
               const double[::1] tlo, const double[::1] thi, Py_ssize_t n0, double rtol):
    """Mean chord length of the unit ball along the last axis over face boxes.

    Row ``i`` maps the points ``u`` (in ``[0, 1]^(d-1)``) affinely onto
    ``[zlo[i], zhi[i]]``; at each point ``z`` the chord is
    ``[-s, s]`` with ``s = sqrt(1 - |z|^2)``, clipped to ``[tlo[i], thi[i]]``.
    The prefix length doubles from ``n0`` until two successive means agree
    to ``rtol`` relative, or the set is exhausted.
    """
    cdef Py_ssize_t big_m = u.shape[0], e = u.shape[1], m = zlo.shape[0]
    cdef Py_ssize_t i, j, a, ncur, nnext
    cdef double total, prev, est
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            total = 0.0
            ncur = n0 if n0 < big_m else big_m
            total = _chord_sum(u, zlo, zhi, tlo[i], thi[i], i, e, 0, ncur, total)
            prev = total / ncur
            while ncur < big_m:
                nnext = 2 * ncur
                if nnext > big_m:
                    nnext = big_m
                total = _chord_sum(u, zlo, zhi, tlo[i], thi[i], i, e, ncur, nnext, total)
                ncur = nnext
                est = total / ncur
                if fabs(est - prev) < rtol * est or (est == 0.0 and prev == 0.0):
                    break
                prev = est
            o[i] = total / ncur
    return out


cdef double _chord_sum(const double[:, ::1] u, const double[:, ::1] zlo, const double[:, ::1] zhi,
                       double tlo, double thi, Py_ssize_t i, Py_ssize_t e,
                       Py_ssize_t j0, Py_ssize_t j1, double total) noexcept nogil:
    cdef Py_ssize_t j, a
    cdef double q, z, s, top, bot
    for j in range(j0, j1):
        q = 1.0
        for a in range(e):
            z = zlo[i, a] + u[j, a] * (zhi[i, a] - zlo[i, a])
            q = q - z * z
        if q > 0.0:
            s = sqrt(q)
            top = thi if thi < s else s
            bot = tlo if tlo > -s else -s
            if top > bot:
                total = total + (top - bot)
    return total
