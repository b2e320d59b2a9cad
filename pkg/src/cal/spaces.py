"""Metric probability spaces and event sets.

Four space kinds share one interface:

* finite products of weighted alphabets under (normalized) Hamming distance,
  with hypercubes as the special case of binary coordinates;
* explicit finite point lists with arbitrary weights;
* symmetric groups of small degree, permutations compared position-wise;
* an isotropic Gaussian on R^n scaled so the expected norm is 1.

Finite spaces with at most ``ENUMERATION_CAP`` points are *enumerable*: they
expose point tables, exact measures, and exact set distances (multi-source
BFS on the substitution graph for products, distance matrices otherwise).
Larger or continuous spaces answer through predicates, registered set
structures (balls, juntas, halfspaces), bounded shell searches, and Monte
Carlo estimation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import _backend
from .errors import (
    SpaceError,
    SpaceTooLargeError,
    UnsupportedSetShapeError,
)
from .rng import stream

__all__ = [
    "ENUMERATION_CAP",
    "HAMMING",
    "NORMALIZED_HAMMING",
    "EUCLIDEAN",
    "MeasureEstimate",
    "Space",
    "ProductSpace",
    "ExplicitSpace",
    "SymmetricGroupSpace",
    "GaussianSpace",
    "EventSet",
    "HammingBall",
    "EuclideanBall",
    "Halfspace",
    "Junta",
    "build_hypercube",
    "build_product",
    "build_explicit",
    "build_sym_group",
    "build_gaussian",
    "ball",
    "expand",
    "measure",
    "distance_to_set",
    "evaluate_on_points",
    "space_to_json",
    "space_from_json",
    "set_to_json",
    "set_from_json",
]

ENUMERATION_CAP = 1 << 20

HAMMING = "hamming"
NORMALIZED_HAMMING = "normalized-hamming"
EUCLIDEAN = "euclidean"

_FINITE_METRICS = (HAMMING, NORMALIZED_HAMMING)

WEIGHT_TOL = 1e-12
_DIST_TOL = 1e-9

SEED_POLICY = {"generator": "philox4x64-10", "stream": "(seed << 64) | index"}


@dataclass(frozen=True)
class MeasureEstimate:
    """A probability with its uncertainty: exact values carry halfwidth 0,
    Monte Carlo values a 95% normal-approximation halfwidth."""

    value: float
    halfwidth: float
    exact: bool
    samples: int | None = None


def _check_weights(w: np.ndarray, what: str) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise SpaceError(f"{what} must be a non-empty 1-D weight vector")
    if np.any(w <= 0):
        raise SpaceError(f"{what} must be strictly positive")
    if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
        raise SpaceError(f"{what} must sum to 1 within {WEIGHT_TOL}, got {w.sum()!r}")
    return w


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------


class Space:
    """Common interface; construct concrete spaces via the build_* helpers."""

    kind: str
    n: int
    metric: str

    @property
    def unit(self) -> float:
        """Length of one substitution step in this space's metric."""
        return 1.0 / self.n if self.metric == NORMALIZED_HAMMING else 1.0

    @property
    def enumerable(self) -> bool:
        raise NotImplementedError

    def num_points(self) -> int | None:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def distance(self, x, y) -> float:
        raise NotImplementedError

    def contains_point(self, x) -> bool:
        try:
            self.check_point(x)
        except SpaceError:
            return False
        return True

    def check_point(self, x):
        raise NotImplementedError

    def sample(self, size: int, seed: int, index: int = 0):
        """Draw ``size`` points from the deterministic stream (seed, index)."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


class ProductSpace(Space):
    """Finite product of weighted alphabets; points are tuples of symbols
    0..size_i-1 and the measure is the product of per-coordinate weights."""

    kind = "finite-product"

    def __init__(self, coordinate_weights: Sequence[Sequence[float]], metric: str = HAMMING):
        if metric not in _FINITE_METRICS:
            raise SpaceError(f"product spaces support {_FINITE_METRICS}, got {metric!r}")
        n = len(coordinate_weights)
        if not 1 <= n <= 64:
            raise SpaceError(f"coordinate count must lie in [1, 64], got {n}")
        ws = []
        for i, w in enumerate(coordinate_weights):
            w = _check_weights(np.asarray(w, dtype=np.float64), f"coordinate {i} weights")
            if w.size < 2 or w.size > 64:
                raise SpaceError(f"alphabet size must lie in [2, 64], got {w.size}")
            ws.append(w)
        self.n = n
        self.metric = metric
        self.coordinate_weights = tuple(ws)
        self.dims = tuple(int(w.size) for w in ws)
        stride_ints = [1] * n
        for i in range(n - 2, -1, -1):
            stride_ints[i] = stride_ints[i + 1] * self.dims[i + 1]
        total = stride_ints[0] * self.dims[0]
        # machine strides when indices fit int64; exact python ints beyond
        if total <= 1 << 62:
            self.strides = np.asarray(stride_ints, dtype=np.int64)
        else:
            self.strides = tuple(stride_ints)
        self._num_points = total
        self._digits: np.ndarray | None = None
        self._weights: np.ndarray | None = None

    @property
    def enumerable(self) -> bool:
        return self._num_points <= ENUMERATION_CAP

    def num_points(self) -> int:
        return self._num_points

    def diameter(self) -> float:
        return self.n * self.unit

    def check_point(self, x):
        if not isinstance(x, tuple) or len(x) != self.n:
            raise SpaceError(f"point must be a {self.n}-tuple, got {x!r}")
        for i, (v, d) in enumerate(zip(x, self.dims)):
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < d:
                raise SpaceError(f"coordinate {i} must lie in [0, {d}), got {v!r}")

    def distance(self, x, y) -> float:
        self.check_point(x)
        self.check_point(y)
        return sum(a != b for a, b in zip(x, y)) * self.unit

    def index_of(self, x) -> int:
        self.check_point(x)
        return sum(int(v) * int(s) for v, s in zip(x, self.strides))

    def point(self, index: int) -> tuple:
        if not 0 <= index < self._num_points:
            raise SpaceError(f"index {index} out of range")
        out = []
        for s, d in zip(self.strides, self.dims):
            out.append(int((index // s) % d))
        return tuple(out)

    def digit_matrix(self) -> np.ndarray:
        """All points as an N x n table of coordinate symbols (int8)."""
        if self._digits is None:
            if not self.enumerable:
                raise SpaceTooLargeError(
                    f"{self._num_points} points exceed the enumeration cap {ENUMERATION_CAP}"
                )
            idx = np.arange(self._num_points, dtype=np.int64)
            cols = [((idx // s) % d).astype(np.int8) for s, d in zip(self.strides, self.dims)]
            self._digits = np.stack(cols, axis=1)
        return self._digits

    def point_weights(self) -> np.ndarray:
        if self._weights is None:
            digits = self.digit_matrix()
            w = np.ones(self._num_points, dtype=np.float64)
            for i, cw in enumerate(self.coordinate_weights):
                w *= cw[digits[:, i]]
            self._weights = w
        return self._weights

    def iter_points(self) -> Iterator[tuple]:
        return itertools.product(*(range(d) for d in self.dims))

    def sample(self, size: int, seed: int, index: int = 0) -> np.ndarray:
        rng = stream(seed, index)
        cols = [
            rng.choice(d, size=size, p=w).astype(np.int8)
            for d, w in zip(self.dims, self.coordinate_weights)
        ]
        return np.stack(cols, axis=1)

    def indices_of_rows(self, rows: np.ndarray) -> np.ndarray:
        return rows.astype(np.int64) @ np.asarray(self.strides, dtype=np.int64)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "metric": self.metric,
            "sizes": list(self.dims),
            "weights": [list(map(float, w)) for w in self.coordinate_weights],
            "seed-policy": SEED_POLICY,
        }


class ExplicitSpace(Space):
    """Finite space given by an explicit point list under Hamming distance."""

    kind = "finite-explicit"

    def __init__(self, points: Sequence[tuple], weights: Sequence[float], metric: str = HAMMING):
        if metric not in _FINITE_METRICS:
            raise SpaceError(f"explicit spaces support {_FINITE_METRICS}, got {metric!r}")
        pts = [tuple(int(v) for v in p) for p in points]
        if not pts:
            raise SpaceError("point list must be non-empty")
        n = len(pts[0])
        if n < 1:
            raise SpaceError("points must have at least one coordinate")
        if any(len(p) != n for p in pts):
            raise SpaceError("all points must have the same length")
        if len(set(pts)) != len(pts):
            raise SpaceError("points must be distinct")
        if len(pts) > ENUMERATION_CAP:
            raise SpaceTooLargeError("explicit spaces must fit the enumeration cap")
        self.n = n
        self.metric = metric
        self.points_list = pts
        self.weights = _check_weights(np.asarray(weights, dtype=np.float64), "weights")
        if self.weights.size != len(pts):
            raise SpaceError("weights must match the point count")
        self._index = {p: i for i, p in enumerate(pts)}
        self._matrix = np.asarray(pts, dtype=np.int16)
        self._dist: np.ndarray | None = None

    @property
    def enumerable(self) -> bool:
        return True

    def num_points(self) -> int:
        return len(self.points_list)

    def diameter(self) -> float:
        return float(self.distance_steps().max()) * self.unit

    def check_point(self, x):
        if not isinstance(x, tuple) or x not in self._index:
            raise SpaceError(f"{x!r} is not a point of this space")

    def distance(self, x, y) -> float:
        self.check_point(x)
        self.check_point(y)
        return sum(a != b for a, b in zip(x, y)) * self.unit

    def index_of(self, x) -> int:
        self.check_point(x)
        return self._index[x]

    def point(self, index: int) -> tuple:
        return self.points_list[index]

    def point_weights(self) -> np.ndarray:
        return self.weights

    def iter_points(self) -> Iterator[tuple]:
        return iter(self.points_list)

    def distance_steps(self) -> np.ndarray:
        """Pairwise substitution counts (int16), computed once."""
        if self._dist is None:
            m = self._matrix
            n_pts = m.shape[0]
            out = np.empty((n_pts, n_pts), dtype=np.int16)
            chunk = max(1, (1 << 22) // max(1, n_pts * m.shape[1]))
            for lo in range(0, n_pts, chunk):
                hi = min(lo + chunk, n_pts)
                out[lo:hi] = (m[lo:hi, None, :] != m[None, :, :]).sum(axis=2)
            self._dist = out
        return self._dist

    def sample(self, size: int, seed: int, index: int = 0) -> np.ndarray:
        rng = stream(seed, index)
        rows = rng.choice(len(self.points_list), size=size, p=self.weights)
        return self._matrix[rows]

    def row_to_point(self, row: np.ndarray) -> tuple:
        return tuple(int(v) for v in row)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "metric": self.metric,
            "points": [list(p) for p in self.points_list],
            "weights": [float(w) for w in self.weights],
            "seed-policy": SEED_POLICY,
        }


class SymmetricGroupSpace(ExplicitSpace):
    """All permutations of degree d under position-wise Hamming distance,
    uniformly weighted.  Degree is capped at 7 (5040 points)."""

    kind = "symmetric-group"

    def __init__(self, degree: int, metric: str = HAMMING):
        if not 1 <= degree <= 7:
            raise SpaceError(f"degree must lie in [1, 7], got {degree}")
        pts = list(itertools.permutations(range(degree)))
        w = np.full(len(pts), 1.0 / len(pts))
        super().__init__(pts, w, metric=metric)
        self.degree = degree

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "metric": self.metric,
            "degree": self.degree,
            "seed-policy": SEED_POLICY,
        }


def _chi_mean(n: int) -> float:
    # E||g|| for g ~ N(0, I_n): sqrt(2) * Gamma((n+1)/2) / Gamma(n/2)
    return math.sqrt(2.0) * math.exp(math.lgamma((n + 1) / 2) - math.lgamma(n / 2))


class GaussianSpace(Space):
    """Isotropic Gaussian on R^n, coordinates scaled by 1/E||g|| so that the
    expected Euclidean norm of a draw is exactly 1."""

    kind = "gaussian"

    def __init__(self, n: int):
        if not 1 <= n <= 10_000:
            raise SpaceError(f"dimension must lie in [1, 10000], got {n}")
        self.n = n
        self.metric = EUCLIDEAN
        self.scale = 1.0 / _chi_mean(n)

    @property
    def enumerable(self) -> bool:
        return False

    def num_points(self) -> int | None:
        return None

    def diameter(self) -> float:
        return math.inf

    def check_point(self, x):
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape != (self.n,):
            raise SpaceError(f"point must be a length-{self.n} vector")

    def distance(self, x, y) -> float:
        self.check_point(x)
        self.check_point(y)
        return float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))

    def sample(self, size: int, seed: int, index: int = 0) -> np.ndarray:
        rng = stream(seed, index)
        return rng.standard_normal((size, self.n)) * self.scale

    def to_json(self) -> dict:
        return {"kind": self.kind, "n": self.n, "seed-policy": SEED_POLICY}


# ---------------------------------------------------------------------------
# set structures
# ---------------------------------------------------------------------------


class SetStructure:
    """Shape descriptors that keep set geometry exact on spaces where
    enumeration is unavailable: membership, point-to-set distance, and
    expansion are all closed-form."""

    def contains(self, space: Space, x) -> bool:
        raise NotImplementedError

    def contains_rows(self, space: Space, rows: np.ndarray) -> np.ndarray:
        return np.fromiter(
            (self.contains(space, _row_point(space, r)) for r in rows),
            dtype=bool,
            count=rows.shape[0],
        )

    def distance(self, space: Space, x) -> float:
        raise NotImplementedError

    def expand(self, space: Space, b: float) -> "SetStructure":
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


def _row_point(space: Space, row: np.ndarray) -> tuple:
    return tuple(int(v) for v in row)


def _steps(space: Space, b: float) -> int:
    """Largest substitution count whose metric length is <= b."""
    if b < 0:
        raise ValueError(f"radius must be non-negative, got {b}")
    return int(math.floor(b / space.unit + _DIST_TOL))


@dataclass(frozen=True)
class HammingBall(SetStructure):
    """All points within ``radius_steps`` substitutions of ``center``."""

    center: tuple
    radius_steps: int

    def contains(self, space, x):
        space.check_point(x)
        return sum(a != b for a, b in zip(x, self.center)) <= self.radius_steps

    def contains_rows(self, space, rows):
        c = np.asarray(self.center)
        return (rows != c).sum(axis=1) <= self.radius_steps

    def distance(self, space, x):
        space.check_point(x)
        hd = sum(a != b for a, b in zip(x, self.center))
        return max(0, hd - self.radius_steps) * space.unit

    def expand(self, space, b):
        return HammingBall(self.center, self.radius_steps + _steps(space, b))

    def to_json(self):
        return {"ball": {"center": list(self.center), "radius_steps": self.radius_steps}}


@dataclass(frozen=True)
class EuclideanBall(SetStructure):
    """Euclidean ball; ``centers`` may hold several rows (a union of balls)."""

    centers: tuple
    radius: float

    def _center_matrix(self) -> np.ndarray:
        return np.asarray(self.centers, dtype=np.float64)

    def contains(self, space, x):
        space.check_point(x)
        d = np.linalg.norm(self._center_matrix() - np.asarray(x, float), axis=1)
        return bool(d.min() <= self.radius + 1e-12)

    def contains_rows(self, space, rows):
        c = self._center_matrix()
        d2 = ((rows[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        return d2.min(axis=1) <= (self.radius + 1e-12) ** 2

    def distance(self, space, x):
        space.check_point(x)
        d = np.linalg.norm(self._center_matrix() - np.asarray(x, float), axis=1)
        return float(max(0.0, d.min() - self.radius))

    def expand(self, space, b):
        return EuclideanBall(self.centers, self.radius + float(b))

    def project(self, space, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        c = self._center_matrix()
        d = np.linalg.norm(c - x, axis=1)
        k = int(d.argmin())
        if d[k] <= self.radius:
            return x
        return c[k] + (x - c[k]) * (self.radius / d[k])

    def to_json(self):
        return {
            "euclidean-ball": {
                "centers": [list(map(float, c)) for c in self.centers],
                "radius": float(self.radius),
            }
        }


@dataclass(frozen=True)
class Halfspace(SetStructure):
    """{x : normal . x <= offset} on a Gaussian space."""

    normal: tuple
    offset: float

    def _a(self) -> np.ndarray:
        return np.asarray(self.normal, dtype=np.float64)

    def contains(self, space, x):
        space.check_point(x)
        return bool(float(self._a() @ np.asarray(x, float)) <= self.offset + 1e-12)

    def contains_rows(self, space, rows):
        return rows @ self._a() <= self.offset + 1e-12

    def distance(self, space, x):
        space.check_point(x)
        a = self._a()
        return float(max(0.0, (float(a @ np.asarray(x, float)) - self.offset) / np.linalg.norm(a)))

    def expand(self, space, b):
        a = self._a()
        return Halfspace(self.normal, self.offset + float(b) * float(np.linalg.norm(a)))

    def project(self, space, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        a = self._a()
        slack = float(a @ x) - self.offset
        if slack <= 0:
            return x
        return x - a * (slack / float(a @ a))

    def to_json(self):
        return {"halfspace": {"normal": list(map(float, self.normal)), "offset": float(self.offset)}}


@dataclass(frozen=True)
class Junta(SetStructure):
    """Membership depends on the coordinates in ``coords`` only: a point
    belongs iff its restriction to ``coords`` equals one of ``patterns``.
    Distances stay exact on arbitrarily large product spaces."""

    coords: tuple
    patterns: frozenset

    def __post_init__(self):
        if not self.patterns:
            raise UnsupportedSetShapeError("junta needs at least one pattern")

    def _restrict(self, x) -> tuple:
        return tuple(x[i] for i in self.coords)

    def contains(self, space, x):
        space.check_point(x)
        return self._restrict(x) in self.patterns

    def contains_rows(self, space, rows):
        sub = rows[:, list(self.coords)]
        pats = np.asarray(sorted(self.patterns), dtype=sub.dtype)
        return (sub[:, None, :] == pats[None, :, :]).all(axis=2).any(axis=1)

    def distance(self, space, x):
        space.check_point(x)
        sub = self._restrict(x)
        best = min(sum(a != b for a, b in zip(sub, p)) for p in self.patterns)
        return best * space.unit

    def expand(self, space, b):
        if not isinstance(space, ProductSpace):
            raise UnsupportedSetShapeError("junta expansion needs a product space")
        k = _steps(space, b)
        alphabets = [range(space.dims[i]) for i in self.coords]
        if math.prod(space.dims[i] for i in self.coords) > 1 << 20:
            raise SpaceTooLargeError("junta expansion over too large a sub-alphabet")
        grown = set()
        for assignment in itertools.product(*alphabets):
            d = min(
                sum(a != b for a, b in zip(assignment, p)) for p in self.patterns
            )
            if d <= k:
                grown.add(assignment)
        return Junta(self.coords, frozenset(grown))

    def measure_exact(self, space: ProductSpace) -> float:
        """Product-measure mass of the junta, for spaces of any size."""
        total = 0.0
        for p in sorted(self.patterns):
            m = 1.0
            for i, v in zip(self.coords, p):
                m *= float(space.coordinate_weights[i][v])
            total += m
        return total

    def to_json(self):
        return {
            "junta": {
                "coords": list(self.coords),
                "patterns": [list(p) for p in sorted(self.patterns)],
            }
        }


# ---------------------------------------------------------------------------
# event sets
# ---------------------------------------------------------------------------


class EventSet:
    """A measurable event.  At least one of ``mask`` (enumerated membership),
    ``structure`` (closed-form geometry), or ``predicate`` is present; the
    most exact representation available answers each query."""

    def __init__(
        self,
        space: Space,
        mask: np.ndarray | None = None,
        predicate: Callable | None = None,
        structure: SetStructure | None = None,
        label: str = "",
    ):
        if mask is None and predicate is None and structure is None:
            raise UnsupportedSetShapeError("event set needs a mask, structure, or predicate")
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            n = space.num_points()
            if n is None or mask.shape != (n,):
                raise SpaceError("mask length must equal the point count")
        self.space = space
        self.mask = mask
        self.predicate = predicate
        self.structure = structure
        self.label = label

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_points(cls, space: Space, points: Iterable[tuple], label: str = "") -> "EventSet":
        if not space.enumerable:
            raise SpaceTooLargeError("point-list sets need an enumerable space")
        mask = np.zeros(space.num_points(), dtype=bool)
        for p in points:
            mask[space.index_of(p)] = True
        return cls(space, mask=mask, label=label)

    @classmethod
    def from_mask(cls, space: Space, mask: np.ndarray, label: str = "") -> "EventSet":
        return cls(space, mask=np.asarray(mask, dtype=bool), label=label)

    @classmethod
    def from_predicate(
        cls, space: Space, predicate: Callable, label: str = "", materialize: bool | None = None
    ) -> "EventSet":
        s = cls(space, predicate=predicate, label=label)
        n = space.num_points()
        if materialize or (materialize is None and space.enumerable and n and n <= 1 << 16):
            s.ensure_mask()
        return s

    @classmethod
    def from_structure(cls, space: Space, structure: SetStructure, label: str = "") -> "EventSet":
        return cls(space, structure=structure, label=label)

    # -- queries -------------------------------------------------------------

    @property
    def is_enumerated(self) -> bool:
        return self.mask is not None

    def ensure_mask(self) -> np.ndarray:
        """Materialize membership over all points (enumerable spaces only)."""
        if self.mask is None:
            if not self.space.enumerable:
                raise SpaceTooLargeError("cannot enumerate a set on a non-enumerable space")
            rows = _all_rows(self.space)
            if self.structure is not None:
                self.mask = np.asarray(self.structure.contains_rows(self.space, rows), dtype=bool)
            else:
                self.mask = np.fromiter(
                    (bool(self.predicate(_row_point(self.space, r))) for r in rows),
                    dtype=bool,
                    count=rows.shape[0],
                )
        return self.mask

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.ensure_mask())

    def contains(self, x) -> bool:
        if self.mask is not None:
            return bool(self.mask[_index_of(self.space, x)])
        if self.structure is not None:
            return bool(self.structure.contains(self.space, x))
        return bool(self.predicate(x))

    def contains_rows(self, rows: np.ndarray) -> np.ndarray:
        if self.mask is not None:
            idx = _indices_of_rows(self.space, rows)
            return self.mask[idx]
        if self.structure is not None:
            return np.asarray(self.structure.contains_rows(self.space, rows), dtype=bool)
        return np.fromiter(
            (bool(self.predicate(_row_point(self.space, r))) for r in rows),
            dtype=bool,
            count=rows.shape[0],
        )

    def validate(self, samples: int = 1000, seed: int = 0) -> bool:
        """Check that the representations agree: every enumerated member
        satisfies the predicate/structure and sampled non-members do not."""
        if self.mask is None:
            return True
        if self.structure is not None:
            check = lambda p: self.structure.contains(self.space, p)
        elif self.predicate is not None:
            check = self.predicate
        else:
            return True
        rows = _all_rows(self.space)
        for i in np.flatnonzero(self.mask):
            if not check(_row_point(self.space, rows[i])):
                return False
        non = np.flatnonzero(~self.mask)
        if non.size:
            rng = stream(seed)
            pick = rng.choice(non, size=min(samples, non.size), replace=False)
            for i in pick:
                if check(_row_point(self.space, rows[i])):
                    return False
        return True

    def __repr__(self):
        tag = self.label or ("mask" if self.mask is not None else "lazy")
        return f"EventSet({self.space.kind}, {tag})"


def _index_of(space: Space, x) -> int:
    if isinstance(space, (ProductSpace, ExplicitSpace)):
        return space.index_of(x)
    raise SpaceError(f"{space.kind} spaces do not index points")


def _all_rows(space: Space) -> np.ndarray:
    if isinstance(space, ProductSpace):
        return space.digit_matrix()
    if isinstance(space, ExplicitSpace):
        return space._matrix
    raise SpaceTooLargeError(f"{space.kind} spaces are not enumerable")


def _indices_of_rows(space: Space, rows: np.ndarray) -> np.ndarray:
    if isinstance(space, ProductSpace):
        return space.indices_of_rows(rows)
    if isinstance(space, ExplicitSpace):
        return np.fromiter(
            (space.index_of(space.row_to_point(r)) for r in rows),
            dtype=np.int64,
            count=rows.shape[0],
        )
    raise SpaceError(f"{space.kind} spaces do not index points")


def evaluate_on_points(space: Space, fn: Callable) -> list:
    """Apply ``fn`` to every point of an enumerable space, in index order."""
    if not space.enumerable:
        raise SpaceTooLargeError("cannot evaluate over a non-enumerable space")
    return [fn(p) for p in space.iter_points()]


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def build_hypercube(n: int, bias: float | Sequence[float] = 0.5, metric: str = HAMMING) -> ProductSpace:
    """n-fold product of biased bits; ``bias`` is P(coordinate = 1), scalar
    or per-coordinate."""
    if np.isscalar(bias):
        biases = [float(bias)] * n
    else:
        biases = [float(b) for b in bias]
        if len(biases) != n:
            raise SpaceError("per-coordinate bias list must have length n")
    for b in biases:
        if not 0.0 < b < 1.0:
            raise SpaceError(f"bias must lie in (0, 1), got {b}")
    return ProductSpace([[1.0 - b, b] for b in biases], metric=metric)


def build_product(
    sizes: Sequence[int], weights: Sequence[Sequence[float]] | None = None, metric: str = HAMMING
) -> ProductSpace:
    """Product space with the given alphabet sizes; uniform per-coordinate
    weights unless explicit ones are supplied."""
    sizes = [int(s) for s in sizes]
    if weights is None:
        weights = [[1.0 / s] * s for s in sizes]
    if len(weights) != len(sizes):
        raise SpaceError("weights must list one vector per coordinate")
    for s, w in zip(sizes, weights):
        if len(w) != s:
            raise SpaceError("weight vector length must equal the alphabet size")
    return ProductSpace(weights, metric=metric)


def build_explicit(points, weights, metric: str = HAMMING) -> ExplicitSpace:
    return ExplicitSpace(points, weights, metric=metric)


def build_sym_group(degree: int, metric: str = HAMMING) -> SymmetricGroupSpace:
    return SymmetricGroupSpace(degree, metric=metric)


def build_gaussian(n: int) -> GaussianSpace:
    return GaussianSpace(n)


# ---------------------------------------------------------------------------
# geometric operations
# ---------------------------------------------------------------------------


def ball(space: Space, center, radius: float) -> EventSet:
    """Closed metric ball.  Enumerated eagerly on enumerable spaces; on
    larger spaces the returned set is structure-backed (mask is None)."""
    space.check_point(center)
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    if isinstance(space, GaussianSpace):
        s = EventSet.from_structure(
            space, EuclideanBall((tuple(float(v) for v in center),), float(radius))
        )
        return s
    structure = HammingBall(tuple(center), _steps(space, radius))
    s = EventSet.from_structure(space, structure, label=f"ball({radius})")
    if space.enumerable:
        s.ensure_mask()
    return s


def set_distances(space: Space, s: EventSet) -> np.ndarray:
    """Exact distance from every point of an enumerable space to ``s``
    (inf where ``s`` is empty)."""
    mask = s.ensure_mask()
    n_pts = mask.shape[0]
    if not mask.any():
        return np.full(n_pts, np.inf)
    if isinstance(space, ProductSpace):
        levels = _backend.product_bfs(
            space.digit_matrix(),
            np.asarray(space.dims, dtype=np.int64),
            space.strides,
            mask.astype(np.uint8),
            space.n,
        )
        return levels.astype(np.float64) * space.unit
    if isinstance(space, ExplicitSpace):
        steps = space.distance_steps()[:, np.flatnonzero(mask)].min(axis=1)
        return steps.astype(np.float64) * space.unit
    raise SpaceTooLargeError(f"{space.kind} spaces are not enumerable")


def expand(space: Space, s: EventSet, b: float) -> EventSet:
    """The b-expansion {x : d(x, s) <= b}.  Exact on enumerable spaces and on
    structure-backed sets; otherwise a bounded-search predicate composition."""
    if b < 0:
        raise ValueError(f"expansion radius must be non-negative, got {b}")
    label = f"{s.label or 'set'}+{b:g}"
    if s.structure is not None:
        out = EventSet.from_structure(space, s.structure.expand(space, b), label=label)
        if s.mask is not None:
            out.ensure_mask()
        return out
    if space.enumerable:
        d = set_distances(space, s)
        return EventSet.from_mask(space, d <= b + _DIST_TOL, label=label)
    if isinstance(space, ProductSpace):
        k = _steps(space, b)

        def member(x, _s=s, _k=k):
            return _shell_search(space, x, _s, _k) is not None

        return EventSet(space, predicate=member, label=label)
    raise UnsupportedSetShapeError(
        "expansion on a continuous space needs a structure-backed set"
    )


def measure(space: Space, s: EventSet, samples: int | None = None, seed: int = 0) -> MeasureEstimate:
    """Probability of ``s``: exact on enumerable spaces (and exact juntas),
    otherwise Monte Carlo over ``samples`` draws from stream (seed, 0)."""
    if space.enumerable:
        mask = s.ensure_mask()
        w = _point_weights(space)
        return MeasureEstimate(float(w[mask].sum()), 0.0, True, None)
    if isinstance(s.structure, Junta) and isinstance(space, ProductSpace):
        return MeasureEstimate(s.structure.measure_exact(space), 0.0, True, None)
    if not samples:
        raise ValueError("a positive sample count is required on non-enumerable spaces")
    rows = space.sample(samples, seed)
    hits = s.contains_rows(rows)
    p = float(np.count_nonzero(hits)) / samples
    halfwidth = 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / samples)
    return MeasureEstimate(p, halfwidth, False, samples)


def _point_weights(space: Space) -> np.ndarray:
    if isinstance(space, (ProductSpace, ExplicitSpace)):
        return space.point_weights()
    raise SpaceTooLargeError(f"{space.kind} spaces are not enumerable")


def _shell_search(space: ProductSpace, x, s: EventSet, cap_steps: int):
    """Search shells of increasing substitution count around x for a member
    of s; canonical order is (positions ascending, symbols ascending).
    Returns (steps, witness) or None once shells past ``cap_steps`` are out."""
    space.check_point(x)
    if s.contains(x):
        return 0, tuple(x)
    n = space.n
    for k in range(1, min(cap_steps, n) + 1):
        for positions in itertools.combinations(range(n), k):
            choices = []
            for i in positions:
                choices.append([v for v in range(space.dims[i]) if v != x[i]])
            for values in itertools.product(*choices):
                y = list(x)
                for i, v in zip(positions, values):
                    y[i] = v
                y = tuple(y)
                if s.contains(y):
                    return k, y
    return None


def distance_to_set(space: Space, x, s: EventSet, cap: float | None = None) -> float | None:
    """Distance from ``x`` to ``s``.  Exact whenever the set is enumerated or
    structure-backed; on non-enumerable product spaces with a bare predicate,
    shells are searched up to ``cap`` and None signals the cap was hit."""
    space.check_point(x)
    if s.structure is not None:
        return float(s.structure.distance(space, x))
    if space.enumerable:
        mask = s.ensure_mask()
        if not mask.any():
            return math.inf
        if isinstance(space, ProductSpace):
            rows = space.digit_matrix()[mask]
            hd = (rows != np.asarray(x, dtype=np.int8)).sum(axis=1)
            return float(hd.min()) * space.unit
        row = space.distance_steps()[space.index_of(x)]
        return float(row[mask].min()) * space.unit
    if isinstance(space, ProductSpace) and s.predicate is not None:
        if cap is None:
            raise ValueError("a search cap is required on non-enumerable spaces")
        hit = _shell_search(space, x, s, _steps(space, cap))
        if hit is None:
            return None
        return hit[0] * space.unit
    raise UnsupportedSetShapeError(
        "distance on a continuous space needs a structure-backed set"
    )


def nearest_in_set(space: Space, x, s: EventSet, cap: float | None = None):
    """Nearest member of ``s`` with deterministic tie-breaking (smallest
    point index / canonical shell order).  Returns (distance, point) or None."""
    space.check_point(x)
    if space.enumerable:
        mask = s.ensure_mask()
        if not mask.any():
            return None
        idx = np.flatnonzero(mask)
        if isinstance(space, ProductSpace):
            rows = space.digit_matrix()[idx]
            hd = (rows != np.asarray(x, dtype=np.int8)).sum(axis=1)
        else:
            hd = space.distance_steps()[space.index_of(x)][idx]
        k = int(hd.argmin())  # argmin takes the first, i.e. smallest index
        d = float(hd[k]) * space.unit
        if cap is not None and d > cap + _DIST_TOL:
            return None
        return d, space.point(int(idx[k]))
    if isinstance(space, ProductSpace):
        if cap is None:
            raise ValueError("a search cap is required on non-enumerable spaces")
        hit = _shell_search(space, x, s, _steps(space, cap))
        if hit is None:
            return None
        return hit[0] * space.unit, hit[1]
    if isinstance(s.structure, (EuclideanBall, Halfspace)):
        y = s.structure.project(space, x)
        d = space.distance(x, y)
        if cap is not None and d > cap + _DIST_TOL:
            return None
        return d, y
    raise UnsupportedSetShapeError("nearest point needs enumeration or a projectable structure")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def space_to_json(space: Space) -> dict:
    return space.to_json()


def space_from_json(doc: dict) -> Space:
    kind = doc.get("kind")
    metric = doc.get("metric", HAMMING)
    if kind == "finite-product":
        if "weights" in doc:
            return ProductSpace(doc["weights"], metric=metric)
        if "bias" in doc:
            bias = doc["bias"]
            n = doc.get("n", len(bias) if isinstance(bias, list) else None)
            if n is None:
                raise SpaceError("hypercube document needs n or a bias list")
            return build_hypercube(int(n), bias, metric=metric)
        sizes = doc.get("sizes")
        if sizes is None:
            raise SpaceError("product document needs sizes, weights, or bias")
        return build_product(sizes, metric=metric)
    if kind == "finite-explicit":
        return ExplicitSpace([tuple(p) for p in doc["points"]], doc["weights"], metric=metric)
    if kind == "symmetric-group":
        return SymmetricGroupSpace(int(doc["degree"]), metric=metric)
    if kind == "gaussian":
        return GaussianSpace(int(doc["n"]))
    raise SpaceError(f"unknown space kind {kind!r}")


def set_to_json(s: EventSet) -> dict:
    if s.structure is not None:
        return s.structure.to_json()
    if s.mask is not None:
        pts = [list(s.space.point(int(i))) for i in np.flatnonzero(s.mask)]
        return {"points": pts}
    raise UnsupportedSetShapeError("predicate-only sets are not serializable")


def set_from_json(space: Space, doc: dict) -> EventSet:
    if "points" in doc:
        return EventSet.from_points(space, [tuple(p) for p in doc["points"]])
    if "ball" in doc:
        spec = doc["ball"]
        center = tuple(spec["center"])
        if "radius_steps" in spec:
            s = EventSet.from_structure(space, HammingBall(center, int(spec["radius_steps"])))
            if space.enumerable:
                s.ensure_mask()
            return s
        return ball(space, center, float(spec["radius"]))
    if "euclidean-ball" in doc:
        spec = doc["euclidean-ball"]
        centers = tuple(tuple(float(v) for v in c) for c in spec["centers"])
        return EventSet.from_structure(space, EuclideanBall(centers, float(spec["radius"])))
    if "halfspace" in doc:
        spec = doc["halfspace"]
        return EventSet.from_structure(
            space, Halfspace(tuple(float(v) for v in spec["normal"]), float(spec["offset"]))
        )
    if "junta" in doc:
        spec = doc["junta"]
        s = EventSet.from_structure(
            space,
            Junta(tuple(int(c) for c in spec["coords"]), frozenset(tuple(p) for p in spec["patterns"])),
        )
        if space.enumerable:
            s.ensure_mask()
        return s
    raise UnsupportedSetShapeError(f"unrecognized set document: {sorted(doc)}")
