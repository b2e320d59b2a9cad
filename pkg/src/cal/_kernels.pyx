# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the hot kernels.

Same entry points and numeric contract as cal._kernels_py: subset measures
are accumulated through identical 8-bit lookup tables in identical order, so
both backends return bit-for-bit equal floats.  The subset scan here streams
subsets one at a time (constant memory) instead of building doubling tables.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"

cdef double HALF_TOL = 1e-12

cdef extern from *:
    int __builtin_ctz(unsigned int) nogil
    int __builtin_popcount(unsigned int) nogil


def subset_scan(ball_masks, weights):
    """See cal._kernels_py.subset_scan."""
    ball_masks = np.ascontiguousarray(ball_masks, dtype=np.uint32)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.uint32_t[:, ::1] balls = ball_masks
    cdef cnp.float64_t[::1] w = weights
    cdef Py_ssize_t n_radii = balls.shape[0]
    cdef Py_ssize_t n_points = balls.shape[1]
    if n_points != w.shape[0]:
        raise ValueError("ball_masks and weights disagree on point count")
    if n_points > 31:
        raise ValueError(f"subset scan supports at most 31 points, got {n_points}")

    cdef int nb = <int>((n_points + 7) // 8)
    tab_arr = np.zeros((nb, 256), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] tab = tab_arr
    cdef int k, j, v
    cdef Py_ssize_t i
    for k in range(nb):
        for v in range(256):
            for j in range(8):
                i = 8 * k + j
                if i < n_points and (v >> j) & 1:
                    tab[k, v] += w[i]

    min_half_arr = np.full(n_radii, np.inf, dtype=np.float64)
    max_prod_arr = np.zeros(n_radii, dtype=np.float64)
    cdef cnp.float64_t[::1] min_half = min_half_arr
    cdef cnp.float64_t[::1] max_prod = max_prod_arr

    cdef unsigned long long total = 1ULL << n_points
    cdef unsigned long long sl
    cdef unsigned int s, tmp, acc
    cdef Py_ssize_t r
    cdef double mu_s, mu_e, prod
    cdef bint half
    with nogil:
        for sl in range(1, total):
            s = <unsigned int>sl
            mu_s = tab[0, s & 0xFF]
            for k in range(1, nb):
                mu_s = mu_s + tab[k, (s >> (8 * k)) & 0xFF]
            half = mu_s >= 0.5 - HALF_TOL
            for r in range(n_radii):
                acc = 0
                tmp = s
                while tmp:
                    i = __builtin_ctz(tmp)
                    acc |= balls[r, i]
                    tmp &= tmp - 1
                mu_e = tab[0, acc & 0xFF]
                for k in range(1, nb):
                    mu_e = mu_e + tab[k, (acc >> (8 * k)) & 0xFF]
                prod = mu_s * (1.0 - mu_e)
                if prod > max_prod[r]:
                    max_prod[r] = prod
                if half and mu_e < min_half[r]:
                    min_half[r] = mu_e
    return min_half_arr, max_prod_arr


def product_bfs(digits, dims, strides, sources, cap):
    """See cal._kernels_py.product_bfs."""
    digits = np.ascontiguousarray(digits, dtype=np.int8)
    dims = np.ascontiguousarray(dims, dtype=np.int64)
    strides = np.ascontiguousarray(strides, dtype=np.int64)
    sources = np.ascontiguousarray(sources, dtype=np.uint8)
    cdef cnp.int8_t[:, ::1] dg = digits
    cdef cnp.int64_t[::1] dm = dims
    cdef cnp.int64_t[::1] st = strides
    cdef cnp.uint8_t[::1] src = sources
    cdef Py_ssize_t n_points = dg.shape[0]
    cdef Py_ssize_t n_coords = dg.shape[1]
    cdef int level_cap = <int>cap

    dist_arr = np.full(n_points, -1, dtype=np.int32)
    queue_arr = np.empty(n_points, dtype=np.int64)
    cdef cnp.int32_t[::1] dist = dist_arr
    cdef cnp.int64_t[::1] queue = queue_arr

    cdef Py_ssize_t head = 0, tail = 0
    cdef Py_ssize_t u, v, i
    cdef long long base
    cdef int symbol, d
    with nogil:
        for u in range(n_points):
            if src[u]:
                dist[u] = 0
                queue[tail] = u
                tail += 1
        while head < tail:
            u = queue[head]
            head += 1
            d = dist[u]
            if d >= level_cap:
                continue
            for i in range(n_coords):
                base = u - dg[u, i] * st[i]
                for symbol in range(<int>dm[i]):
                    v = base + symbol * st[i]
                    if dist[v] < 0:
                        dist[v] = d + 1
                        queue[tail] = v
                        tail += 1
    return dist_arr
