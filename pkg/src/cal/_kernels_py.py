"""Pure NumPy backend for the hot kernels.

Two loops dominate this package's exact computations:

* ``subset_scan`` visits every subset of a small finite space to find worst
  cases for the concentration function and for the product-measure expansion
  inequality;
* ``product_bfs`` runs multi-source breadth-first search on the substitution
  graph of a finite product space (points adjacent iff they differ in one
  coordinate), which yields exact distances to a set for every point.

The compiled twin (cal._kernels) implements the same entry points.  Numeric
contract: subset measures are accumulated through identical 8-bit lookup
tables in identical order, so both backends return bit-for-bit equal floats.
"""

import numpy as np

BACKEND_NAME = "pure"

# Subsets whose measure is within HALF_TOL of 1/2 count as half-measure sets.
# Shared by both backends; keep in sync with _kernels.pyx.
HALF_TOL = 1e-12

# The doubling table uses one uint32 per subset; above this bit count fall
# back to a chunked per-bit loop instead of allocating 2^N words.
_DP_MAX_BITS = 24

_CHUNK = 1 << 20


def _byte_tables(weights: np.ndarray) -> np.ndarray:
    """Per-byte partial-sum tables: tab[k][v] = sum of weights 8k+j for bits j of v.

    Entries accumulate in ascending bit order; the compiled backend adds in
    the same order so table contents match exactly.
    """
    n = weights.shape[0]
    nb = (n + 7) // 8
    tab = np.zeros((nb, 256), dtype=np.float64)
    v = np.arange(256)
    for k in range(nb):
        for j in range(8):
            i = 8 * k + j
            if i < n:
                tab[k, (v >> j) & 1 == 1] += weights[i]
    return tab


def _mask_measure(masks: np.ndarray, tab: np.ndarray) -> np.ndarray:
    """Total weight of the points named by each bitmask."""
    acc = tab[0][masks & 0xFF]
    for k in range(1, tab.shape[0]):
        acc = acc + tab[k][(masks >> np.uint32(8 * k)) & 0xFF]
    return acc


def subset_scan(ball_masks: np.ndarray, weights: np.ndarray):
    """Scan all nonempty subsets S of an N-point space (N <= 31).

    ``ball_masks[r, i]`` is the bitmask of points within radius r of point i,
    so the radius-r expansion of subset S is the OR of ``ball_masks[r, i]``
    over the members i of S.

    Returns ``(min_half, max_prod)`` where, per radius r,

    * ``min_half[r]``  = min measure of the r-expansion over subsets of
      measure >= 1/2 (the quantity whose complement is the concentration
      function), and
    * ``max_prod[r]``  = max over all subsets of mu(S) * (1 - mu(S_r)), the
      worst case of the product-measure expansion inequality.
    """
    ball_masks = np.ascontiguousarray(ball_masks, dtype=np.uint32)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    n_radii, n_points = ball_masks.shape
    if n_points != weights.shape[0]:
        raise ValueError("ball_masks and weights disagree on point count")
    if n_points > 31:
        raise ValueError(f"subset scan supports at most 31 points, got {n_points}")
    tab = _byte_tables(weights)
    total = 1 << n_points
    min_half = np.full(n_radii, np.inf)
    max_prod = np.full(n_radii, -np.inf)
    if n_points <= _DP_MAX_BITS:
        expansion = np.empty(total, dtype=np.uint32)
        for r in range(n_radii):
            # Doubling construction: the top half of the table is the bottom
            # half with point i added, whose ball ORs in wholesale.
            expansion[0] = 0
            for i in range(n_points):
                size = 1 << i
                np.bitwise_or(
                    expansion[:size], ball_masks[r, i], out=expansion[size : 2 * size]
                )
            for lo in range(0, total, _CHUNK):
                hi = min(lo + _CHUNK, total)
                s = np.arange(lo, hi, dtype=np.uint32)
                mu_s = _mask_measure(s, tab)
                mu_e = _mask_measure(expansion[lo:hi], tab)
                prod = mu_s * (1.0 - mu_e)
                max_prod[r] = max(max_prod[r], float(prod.max()))
                half = mu_s >= 0.5 - HALF_TOL
                if half.any():
                    min_half[r] = min(min_half[r], float(mu_e[half].min()))
    else:
        for lo in range(0, total, _CHUNK):
            hi = min(lo + _CHUNK, total)
            s = np.arange(lo, hi, dtype=np.uint32)
            mu_s = _mask_measure(s, tab)
            half = mu_s >= 0.5 - HALF_TOL
            any_half = bool(half.any())
            for r in range(n_radii):
                exp = np.zeros(hi - lo, dtype=np.uint32)
                for i in range(n_points):
                    member = ((s >> np.uint32(i)) & 1).astype(bool)
                    exp[member] |= ball_masks[r, i]
                mu_e = _mask_measure(exp, tab)
                prod = mu_s * (1.0 - mu_e)
                max_prod[r] = max(max_prod[r], float(prod.max()))
                if any_half:
                    min_half[r] = min(min_half[r], float(mu_e[half].min()))
    # The empty set contributes mu_s = 0, so it never wins either reduction:
    # its product is 0 and max_prod always sees the full set's 0 as well.
    return min_half, np.maximum(max_prod, 0.0)


def product_bfs(
    digits: np.ndarray,
    dims: np.ndarray,
    strides: np.ndarray,
    sources: np.ndarray,
    cap: int,
) -> np.ndarray:
    """Exact distances from a source set on a product space's substitution graph.

    ``digits`` is the N x n matrix of coordinate values, ``strides`` the
    mixed-radix place values, ``sources`` a boolean membership vector.
    Returns int32 distances with -1 for points further than ``cap`` levels
    (pass ``cap >= n`` for a complete sweep).
    """
    n_points, n_coords = digits.shape
    dist = np.full(n_points, -1, dtype=np.int32)
    frontier = np.flatnonzero(sources).astype(np.int64)
    dist[frontier] = 0
    level = 0
    while frontier.size and level < cap:
        level += 1
        fd = digits[frontier]
        neighbors = []
        for i in range(n_coords):
            base = frontier - fd[:, i].astype(np.int64) * strides[i]
            for symbol in range(int(dims[i])):
                neighbors.append(base + symbol * strides[i])
        cand = np.unique(np.concatenate(neighbors))
        new = cand[dist[cand] < 0]
        dist[new] = level
        frontier = new
    return dist
