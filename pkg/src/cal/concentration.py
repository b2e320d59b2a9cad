"""Concentration functions: exact values, certified upper bounds, and
empirical lower bounds.

The concentration function of a space is

    alpha(b) = 1 - inf { mu(S_b) : mu(S) >= 1/2 },

the largest mass that can stay farther than ``b`` from some half-measure
set.  Exact values come from a full subset scan (tiny spaces only).  Upper
bounds come from the product-measure expansion inequality

    mu(S_b) >= 1 - exp(-b^2 / n) / mu(S)

and from the two-parameter family alpha(b) <= k1 * exp(-k2 * b^2 * n) on
the normalized scale.  Lower bounds come from explicit witness sets: any S
with mu(S) >= 1/2 certifies alpha(b) >= 1 - mu(S_b).  A bounded-difference
tail check for f(x) = d(x, S) rounds out the toolkit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _backend
from .errors import NoValidCandidateError, SpaceError, SpaceTooLargeError
from .rng import stream
from .spaces import (
    HAMMING,
    NORMALIZED_HAMMING,
    EventSet,
    ExplicitSpace,
    HammingBall,
    Junta,
    ProductSpace,
    Space,
    ball,
    expand,
    measure,
    set_distances,
)

__all__ = [
    "ConcentrationProfile",
    "LevyParams",
    "hypercube_levy_params",
    "exact_alpha",
    "exact_alpha_profile",
    "talagrand_profile",
    "levy_profile",
    "empirical_alpha",
    "empirical_profile",
    "candidate_family",
    "mcdiarmid_check",
    "McdiarmidReport",
    "profile_rows",
    "EXACT_SCAN_MAX_POINTS",
]

EXACT_SCAN_MAX_POINTS = 20

_FP_TOL = 1e-12


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


class ConcentrationProfile:
    """A function b -> alpha_hat(b) in [0,1], non-increasing, with exact
    integrals.

    ``sense`` records which side of the true alpha the profile sits on:
    "exact", "upper" (certified bound, safe inside certificates), or
    "lower" (witness-based, safe only as a floor).  Two internal shapes
    cover every construction here: a step table over integer substitution
    radii, and the clipped Gaussian family min(1, k1*exp(-c*b^2)); custom
    callables fall back to adaptive quadrature.
    """

    def __init__(
        self,
        provenance: str,
        scale: str,
        sense: str,
        b_max: float,
        steps: Sequence[float] | None = None,
        unit: float | None = None,
        k1: float | None = None,
        c: float | None = None,
        fn: Callable[[float], float] | None = None,
        meta: dict | None = None,
    ):
        if steps is not None:
            self._kind = "steps"
            self.steps = np.clip(np.asarray(steps, dtype=np.float64), 0.0, 1.0)
            if unit is None or unit <= 0:
                raise ValueError("step profiles need a positive unit")
            self.unit = float(unit)
        elif k1 is not None:
            self._kind = "gauss"
            if k1 <= 0 or c is None or c <= 0:
                raise ValueError("gaussian-family profiles need k1 > 0 and c > 0")
            self.k1 = float(k1)
            self.c = float(c)
        elif fn is not None:
            self._kind = "fn"
            self.fn = fn
        else:
            raise ValueError("profile needs steps, (k1, c), or a callable")
        self.provenance = provenance
        self.scale = scale
        self.sense = sense
        self.b_max = float(b_max)
        self.meta = dict(meta or {})

    @property
    def certifiable(self) -> bool:
        """True when the profile sits at or above the true alpha, so it can
        back risk/robustness certificates."""
        return self.sense in ("exact", "upper")

    def __call__(self, b: float) -> float:
        if b < 0:
            raise ValueError(f"radius must be non-negative, got {b}")
        if self._kind == "steps":
            k = int(math.floor(b / self.unit + _FP_TOL))
            if k >= self.steps.size:
                return 0.0
            return float(self.steps[k])
        if self._kind == "gauss":
            return min(1.0, self.k1 * math.exp(-self.c * b * b))
        return min(1.0, max(0.0, float(self.fn(b))))

    def integral(self, hi: float, lo: float = 0.0) -> float:
        """Integral of the profile over [lo, hi], exact for step and
        Gaussian-family shapes."""
        if lo < 0 or hi < lo:
            raise ValueError(f"need 0 <= lo <= hi, got [{lo}, {hi}]")
        if self._kind == "steps":
            return self._step_integral(lo, hi)
        if self._kind == "gauss":
            return _gauss_integral(self.k1, self.c, lo, hi)
        return _adaptive_simpson(self.__call__, lo, hi)

    def tail_integral(self, lo: float = 0.0) -> float:
        """Integral from lo to infinity; steps vanish past their table and
        the Gaussian family has a closed-form erfc tail."""
        if self._kind == "steps":
            return self._step_integral(lo, self.steps.size * self.unit)
        if self._kind == "gauss":
            return _gauss_tail(self.k1, self.c, lo)
        if not math.isfinite(self.b_max):
            raise ValueError("custom profiles need a finite domain for tail integrals")
        return _adaptive_simpson(self.__call__, lo, self.b_max)

    def _step_integral(self, lo: float, hi: float) -> float:
        u = self.unit
        s = self.steps
        total = 0.0
        k = int(math.floor(lo / u + _FP_TOL))
        z = lo
        while z < hi - _FP_TOL and k < s.size:
            edge = min(hi, (k + 1) * u)
            total += float(s[k]) * (edge - z)
            z = edge
            k += 1
        return total

    def grid(self, bs: Iterable[float]) -> list[tuple[float, float, str]]:
        return [(float(b), self(float(b)), self.provenance) for b in bs]

    def __repr__(self):
        return f"ConcentrationProfile({self.provenance}, scale={self.scale}, sense={self.sense})"


def profile_rows(profile: ConcentrationProfile, bs: Iterable[float]):
    """CSV-ready rows (b, alpha_hat, provenance)."""
    return profile.grid(bs)


def _gauss_integral(k1: float, c: float, lo: float, hi: float) -> float:
    # integral of min(1, k1 exp(-c z^2)) over [lo, hi]
    def anti(B: float) -> float:
        zc = math.sqrt(max(math.log(k1), 0.0) / c) if k1 > 1 else 0.0
        flat = min(B, zc)
        if B <= zc:
            return flat
        rc = math.sqrt(c)
        curve = (k1 / 2.0) * math.sqrt(math.pi / c) * (math.erf(rc * B) - math.erf(rc * zc))
        return flat + curve

    return anti(hi) - anti(lo)


def _gauss_tail(k1: float, c: float, lo: float) -> float:
    zc = math.sqrt(max(math.log(k1), 0.0) / c) if k1 > 1 else 0.0
    rc = math.sqrt(c)
    start = max(lo, zc)
    tail = (k1 / 2.0) * math.sqrt(math.pi / c) * math.erfc(rc * start)
    if lo < zc:
        tail += zc - lo
    return tail


def _adaptive_simpson(f: Callable[[float], float], lo: float, hi: float, rel_tol: float = 1e-8) -> float:
    if hi <= lo:
        return 0.0

    def simpson(a: float, b: float, fa: float, fm: float, fb: float) -> float:
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(a, m, fa, flm, fm)
        right = simpson(m, b, fm, frm, fb)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * rel_tol * (abs(left + right) + 1e-300):
            return left + right + (left + right - whole) / 15.0
        return recurse(a, m, fa, flm, fm, left, depth - 1) + recurse(
            m, b, fm, frm, fb, right, depth - 1
        )

    fa, fb = f(lo), f(hi)
    fm = f(0.5 * (lo + hi))
    return recurse(lo, hi, fa, fm, fb, simpson(lo, hi, fa, fm, fb), 48)


# ---------------------------------------------------------------------------
# exact alpha by subset scan
# ---------------------------------------------------------------------------


def _pairwise_steps(space: Space) -> np.ndarray:
    if isinstance(space, ProductSpace):
        digits = space.digit_matrix()
        return (digits[:, None, :] != digits[None, :, :]).sum(axis=2).astype(np.int16)
    if isinstance(space, ExplicitSpace):
        return space.distance_steps()
    raise SpaceTooLargeError(f"{space.kind} spaces are not enumerable")


def scan_all_subsets(space: Space) -> tuple[np.ndarray, np.ndarray]:
    """Scan every non-empty subset S; per integer radius r return

    * min over mu(S) >= 1/2 of mu(S_r)           (drives exact alpha)
    * max over all S of mu(S) * (1 - mu(S_r))    (tightness of the
      product-measure expansion inequality)
    """
    n_pts = space.num_points()
    if n_pts is None or n_pts > 31:
        raise SpaceTooLargeError("subset scans need at most 31 points")
    steps = _pairwise_steps(space)
    diam = int(steps.max())
    radii = diam + 1
    ball_masks = np.zeros((radii, n_pts), dtype=np.uint32)
    for r in range(radii):
        within = steps <= r
        for i in range(n_pts):
            m = 0
            for j in np.flatnonzero(within[i]):
                m |= 1 << int(j)
            ball_masks[r, i] = m
    weights = np.asarray(_space_weights(space), dtype=np.float64)
    return _backend.subset_scan(ball_masks, weights)


def _space_weights(space: Space) -> np.ndarray:
    if isinstance(space, (ProductSpace, ExplicitSpace)):
        return space.point_weights()
    raise SpaceTooLargeError(f"{space.kind} spaces are not enumerable")


def exact_alpha_profile(space: Space) -> ConcentrationProfile:
    """Exact alpha at every integer substitution radius, by scanning all
    2^N - 1 subsets.  Limited to EXACT_SCAN_MAX_POINTS points."""
    n_pts = space.num_points()
    if n_pts is None or n_pts > EXACT_SCAN_MAX_POINTS:
        raise SpaceTooLargeError(
            f"exact alpha scans at most {EXACT_SCAN_MAX_POINTS} points, space has {n_pts}"
        )
    min_half, _ = scan_all_subsets(space)
    steps = 1.0 - min_half
    return ConcentrationProfile(
        provenance="exact",
        scale=space.metric,
        sense="exact",
        b_max=(steps.size - 1) * space.unit,
        steps=steps,
        unit=space.unit,
        meta={"points": n_pts},
    )


def exact_alpha(space: Space, b: float) -> float:
    """alpha(b) by brute force; prefer exact_alpha_profile when evaluating
    many radii, the scan is rerun on every call."""
    return exact_alpha_profile(space)(b)


# ---------------------------------------------------------------------------
# certified upper bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyParams:
    """Constants of the family alpha_n(b) <= k1 * exp(-k2 * b^2 * n)."""

    k1: float
    k2: float
    n: int

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.n < 1:
            raise ValueError("dimension must be at least 1")


def hypercube_levy_params(n: int) -> LevyParams:
    """Binary product spaces on the normalized scale: plugging the half
    measure into the product expansion inequality gives (k1, k2) = (2, 1)."""
    return LevyParams(2.0, 1.0, n)


def talagrand_profile(space: Space) -> ConcentrationProfile:
    """Upper bound alpha(b) <= min(1, 2 exp(-b^2/n)) for product spaces
    under the unnormalized Hamming metric."""
    if not isinstance(space, ProductSpace):
        raise SpaceError("the product expansion bound needs a product space")
    if space.metric != HAMMING:
        raise SpaceError(
            "profile is stated on the unnormalized Hamming scale; "
            "use levy_profile for normalized radii"
        )
    return ConcentrationProfile(
        provenance="talagrand",
        scale=HAMMING,
        sense="upper",
        b_max=math.inf,
        k1=2.0,
        c=1.0 / space.n,
        meta={"n": space.n},
    )


def levy_profile(params: LevyParams, scale: str = NORMALIZED_HAMMING) -> ConcentrationProfile:
    """Upper bound min(1, k1 * exp(-k2 * b^2 * n)); radii on the normalized
    scale, where the space has diameter about 1."""
    return ConcentrationProfile(
        provenance="levy",
        scale=scale,
        sense="upper",
        b_max=math.inf,
        k1=params.k1,
        c=params.k2 * params.n,
        meta={"k1": params.k1, "k2": params.k2, "n": params.n},
    )


# ---------------------------------------------------------------------------
# empirical lower bounds
# ---------------------------------------------------------------------------


def candidate_family(
    space: Space, name: str = "auto", samples: int | None = None, seed: int = 0
) -> list[EventSet]:
    """Deterministic witness candidates of measure >= 1/2.

    * "balls": Hamming balls at sampled centers, radius grown to half mass;
    * "subcubes": juntas over a short coordinate prefix whose heaviest
      patterns accumulate half mass;
    * "halfspaces": digit-sum threshold sets {x : sum_i x_i <= t};
    * "auto": all of the above.
    """
    if name == "auto":
        out = []
        for part in ("balls", "subcubes", "halfspaces"):
            out.extend(candidate_family(space, part, samples=samples, seed=seed))
        return out
    if name == "balls":
        return _ball_candidates(space, samples, seed)
    if name == "subcubes":
        return _junta_candidates(space)
    if name == "halfspaces":
        return _digit_sum_candidates(space)
    raise ValueError(f"unknown candidate family {name!r}")


_MAX_CENTERS = 16


def _ball_candidates(space: Space, samples: int | None, seed: int) -> list[EventSet]:
    if not isinstance(space, (ProductSpace, ExplicitSpace)):
        return []
    centers = [space.point(0)]
    rng = stream(seed, 1)
    n_pts = space.num_points()
    if space.enumerable:
        extra = rng.choice(n_pts, size=min(_MAX_CENTERS - 1, n_pts), replace=False)
        centers.extend(space.point(int(i)) for i in sorted(extra))
    else:
        rows = space.sample(_MAX_CENTERS - 1, seed, index=1)
        centers.extend(tuple(int(v) for v in r) for r in rows)
    out = []
    seen = set()
    for c in centers:
        if c in seen:
            continue
        seen.add(c)
        r = _half_mass_radius(space, c, samples, seed)
        if r is None:
            continue
        out.append(ball(space, c, r * space.unit))
    return out


def _half_mass_radius(space: Space, center, samples: int | None, seed: int) -> int | None:
    if space.enumerable:
        if isinstance(space, ProductSpace):
            digits = space.digit_matrix()
            hd = (digits != np.asarray(center, dtype=np.int8)).sum(axis=1)
        else:
            hd = space.distance_steps()[space.index_of(center)]
        w = _space_weights(space)
        for r in range(space.n + 1):
            if float(w[hd <= r].sum()) >= 0.5 - _FP_TOL:
                return r
        return None
    if samples is None:
        return None
    rows = space.sample(samples, seed, index=2)
    hd = (rows != np.asarray(center, dtype=np.int8)).sum(axis=1)
    for r in range(space.n + 1):
        if float(np.count_nonzero(hd <= r)) / samples >= 0.5:
            return r
    return None


def _junta_candidates(space: Space) -> list[EventSet]:
    if not isinstance(space, ProductSpace):
        return []
    out = []
    for k in range(1, min(3, space.n) + 1):
        coords = tuple(range(k))
        pattern_mass = []
        for assignment in itertools.product(*(range(space.dims[i]) for i in coords)):
            m = 1.0
            for i, v in zip(coords, assignment):
                m *= float(space.coordinate_weights[i][v])
            pattern_mass.append((assignment, m))
        pattern_mass.sort(key=lambda t: (-t[1], t[0]))
        chosen, total = [], 0.0
        for assignment, m in pattern_mass:
            chosen.append(assignment)
            total += m
            if total >= 0.5 - _FP_TOL:
                break
        if total >= 0.5 - _FP_TOL:
            s = EventSet.from_structure(
                space, Junta(coords, frozenset(chosen)), label=f"junta{k}"
            )
            if space.enumerable:
                s.ensure_mask()
            out.append(s)
    return out


def _digit_sum_candidates(space: Space) -> list[EventSet]:
    if not (isinstance(space, ProductSpace) and space.enumerable):
        return []
    digits = space.digit_matrix()
    sums = digits.astype(np.int64).sum(axis=1)
    w = _space_weights(space)
    out = []
    for t in range(int(sums.max()) + 1):
        mask = sums <= t
        if float(w[mask].sum()) >= 0.5 - _FP_TOL:
            out.append(EventSet.from_mask(space, mask, label=f"digit-sum<={t}"))
            break
    return out


def _resolve_family(space, family, samples, seed) -> list[EventSet]:
    if isinstance(family, str):
        return candidate_family(space, family, samples=samples, seed=seed)
    if callable(family):
        return list(family(space, seed))
    return list(family)


def empirical_alpha(
    space: Space, family="auto", b: float = 0.0, samples: int | None = None, seed: int = 0
) -> float:
    """Witness lower bound on alpha(b): the best 1 - mu(S_b) over candidate
    sets S whose measure reaches 1/2.  Candidates that miss half measure
    are skipped; if none qualify the call fails."""
    if b < 0:
        raise ValueError(f"radius must be non-negative, got {b}")
    candidates = _resolve_family(space, family, samples, seed)
    best = None
    for s in candidates:
        m = measure(space, s, samples=samples, seed=seed)
        threshold = 0.5 - _FP_TOL if m.exact else 0.5
        if m.value < threshold:
            continue
        grown = expand(space, s, b)
        mb = measure(space, grown, samples=samples, seed=seed)
        value = max(0.0, 1.0 - mb.value)
        if best is None or value > best:
            best = value
    if best is None:
        raise NoValidCandidateError("no candidate set reached measure 1/2")
    return best


def empirical_profile(
    space: Space, family="auto", samples: int | None = None, seed: int = 0
) -> ConcentrationProfile:
    """Step profile of witness lower bounds at every substitution radius,
    using one shared candidate list so the curve is non-increasing."""
    candidates = [
        s
        for s in _resolve_family(space, family, samples, seed)
        if measure(space, s, samples=samples, seed=seed).value
        >= (0.5 - _FP_TOL if space.enumerable else 0.5)
    ]
    if not candidates:
        raise NoValidCandidateError("no candidate set reached measure 1/2")
    radii = space.n + 1
    steps = np.zeros(radii)
    for s in candidates:
        if space.enumerable:
            d = set_distances(space, s)
            w = _space_weights(space)
            for r in range(radii):
                cov = float(w[d <= r * space.unit + _FP_TOL].sum())
                steps[r] = max(steps[r], 1.0 - cov)
        else:
            for r in range(radii):
                grown = expand(space, s, r * space.unit)
                cov = measure(space, grown, samples=samples, seed=seed).value
                steps[r] = max(steps[r], 1.0 - cov)
    return ConcentrationProfile(
        provenance="empirical",
        scale=space.metric,
        sense="lower",
        b_max=(radii - 1) * space.unit,
        steps=steps,
        unit=space.unit,
        meta={"candidates": len(candidates)},
    )


# ---------------------------------------------------------------------------
# bounded-difference tail check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class McdiarmidReport:
    """Outcome of the lower-tail check for f(x) = d(x, S)."""

    mean: float
    tail: float
    bound: float
    holds: bool
    exact: bool
    samples: int | None = None
    stderr: float = 0.0


def mcdiarmid_check(
    space: Space, s: EventSet, b: float, samples: int | None = None, seed: int = 0
) -> McdiarmidReport:
    """Check Pr[f <= E[f] - b] <= exp(-2 b^2 / (n unit^2)) for the
    coordinate-Lipschitz function f(x) = d(x, S).

    Exact on enumerable spaces (f's full distribution); elsewhere Monte
    Carlo with a 3-standard-error acceptance margin, requiring a
    structure-backed set so per-sample distances stay exact.
    """
    if b < 0:
        raise ValueError(f"deviation must be non-negative, got {b}")
    if not isinstance(space, ProductSpace):
        raise SpaceError("the bounded-difference check needs a product space")
    exponent = -2.0 * (b / space.unit) ** 2 / space.n
    bound = math.exp(exponent)
    if space.enumerable:
        d = set_distances(space, s)
        if not np.all(np.isfinite(d)):
            raise SpaceError("the set is empty; f is not defined")
        w = _space_weights(space)
        mean = float(np.dot(w, d))
        tail = float(w[d <= mean - b + _FP_TOL].sum())
        return McdiarmidReport(mean, tail, bound, tail <= bound + _FP_TOL, True)
    if s.structure is None:
        from .errors import DistanceCapExceededError

        raise DistanceCapExceededError(
            "Monte Carlo tail checks need structure-backed sets for exact distances"
        )
    if not samples:
        raise ValueError("a positive sample count is required on non-enumerable spaces")
    rows = space.sample(samples, seed)
    d = np.fromiter(
        (s.structure.distance(space, tuple(int(v) for v in r)) for r in rows),
        dtype=np.float64,
        count=samples,
    )
    mean = float(d.mean())
    hits = d <= mean - b + _FP_TOL
    tail = float(np.count_nonzero(hits)) / samples
    stderr = math.sqrt(max(tail * (1.0 - tail), 0.0) / samples)
    return McdiarmidReport(
        mean, tail, bound, tail <= bound + 3.0 * stderr + _FP_TOL, False, samples, stderr
    )
