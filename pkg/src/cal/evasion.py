"""Adversarial risk and target-error robustness for evasion attacks.

For an error region E (hypothesis disagrees with concept, or any bad
event) the quantities computed here are

    Risk_b = mu(E_b)                  risk after b-perturbation
    Rob_rho = inf { E[1_S(x) d(x,E)] : mu(S) >= rho }

with the identity, at rho achieved as Risk_ell,

    Rob_rho = rho * ell - integral_0^ell Risk_z dz

realized two independent ways (step-sum of the risk curve, and a greedy
shell accumulation), plus certified bounds: a concentration profile with
epsilon > alpha_hat(b1) forces Risk_b1 > 1/2 and, with gamma >= alpha_hat(b2),
Risk_{b1+b2} >= 1 - gamma; robustness is bounded by
(1-epsilon) b1 + integral_0^{b2} alpha_hat; the two-parameter normal-family
profiles make all thresholds closed-form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .concentration import ConcentrationProfile, LevyParams
from .errors import (
    NoCertificateError,
    RhoUnachievableError,
    SpaceError,
    UnsupportedSetShapeError,
)
from .spaces import (
    EventSet,
    GaussianSpace,
    MeasureEstimate,
    ProductSpace,
    Space,
    distance_to_set,
    expand,
    measure,
    nearest_in_set,
    set_distances,
)

__all__ = [
    "ClassifierPair",
    "RiskPoint",
    "RiskCurve",
    "RobustnessReport",
    "LevyAttackBounds",
    "error_region",
    "as_error_region",
    "risk",
    "adv_risk",
    "risk_curve",
    "find_adversarial_example",
    "rob_target",
    "rob_greedy_oracle",
    "risk_certificate",
    "CertificateFlags",
    "rob_upper_bound",
    "levy_attack_bounds",
]

_FP_TOL = 1e-12
_DIST_TOL = 1e-9


@dataclass(frozen=True)
class ClassifierPair:
    """A hypothesis and the ground-truth concept over a shared label set."""

    hypothesis: Callable
    concept: Callable
    labels: tuple

    def __post_init__(self):
        if len(self.labels) < 1:
            raise ValueError("label set must be non-empty")

    def disagrees(self, x) -> bool:
        return self.hypothesis(x) != self.concept(x)


def error_region(space: Space, pair: ClassifierPair) -> EventSet:
    """The event {x : h(x) != c(x)}, enumerated when the space allows it."""
    return EventSet.from_predicate(
        space, pair.disagrees, label="error-region",
        materialize=True if space.enumerable else None,
    )


def as_error_region(space: Space, target) -> EventSet:
    """Accept either a ClassifierPair or any EventSet as the bad event."""
    if isinstance(target, EventSet):
        return target
    if isinstance(target, ClassifierPair):
        return error_region(space, target)
    raise TypeError(f"expected ClassifierPair or EventSet, got {type(target).__name__}")


def risk(space: Space, target, samples: int | None = None, seed: int = 0) -> MeasureEstimate:
    """mu(E), the plain misclassification rate."""
    return measure(space, as_error_region(space, target), samples=samples, seed=seed)


def adv_risk(
    space: Space, target, b: float, samples: int | None = None, seed: int = 0
) -> MeasureEstimate:
    """Risk_b = mu(E_b): mass within distance b of the error region."""
    if b < 0:
        raise ValueError(f"budget must be non-negative, got {b}")
    e = as_error_region(space, target)
    return measure(space, expand(space, e, b), samples=samples, seed=seed)


@dataclass(frozen=True)
class RiskPoint:
    b: float
    value: float
    exact: bool
    halfwidth: float = 0.0


@dataclass(frozen=True)
class RiskCurve:
    """Risk_b tabulated over an ascending budget grid."""

    points: tuple

    def __post_init__(self):
        bs = [p.b for p in self.points]
        if any(b2 <= b1 for b1, b2 in zip(bs, bs[1:])):
            raise ValueError("budgets must be strictly increasing")
        for p in self.points:
            if not -_FP_TOL <= p.value <= 1 + _FP_TOL:
                raise ValueError(f"risk {p.value} outside [0,1]")
        for p1, p2 in zip(self.points, self.points[1:]):
            slack = _FP_TOL if (p1.exact and p2.exact) else p1.halfwidth + p2.halfwidth + 1e-6
            if p2.value < p1.value - slack:
                raise ValueError("risk must be non-decreasing in the budget")

    def to_rows(self) -> list[tuple]:
        return [(p.b, p.value, p.exact, p.halfwidth) for p in self.points]

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def risk_curve(
    space: Space, target, b_grid: Sequence[float], samples: int | None = None, seed: int = 0
) -> RiskCurve:
    """Tabulate Risk_b over the grid; one distance transform serves every
    grid point on enumerable spaces."""
    grid = [float(b) for b in b_grid]
    if any(b < 0 for b in grid):
        raise ValueError("budgets must be non-negative")
    e = as_error_region(space, target)
    pts = []
    if space.enumerable:
        d = set_distances(space, e)
        w = _weights(space)
        for b in grid:
            pts.append(RiskPoint(b, float(w[d <= b + _DIST_TOL].sum()), True))
    else:
        for i, b in enumerate(grid):
            m = measure(space, expand(space, e, b), samples=samples, seed=seed)
            pts.append(RiskPoint(b, m.value, m.exact, m.halfwidth))
    return RiskCurve(tuple(pts))


def _weights(space: Space) -> np.ndarray:
    return space.point_weights()


def find_adversarial_example(space: Space, target, x, b: float):
    """A nearest point of the error region within budget b, or None.

    Enumerable spaces scan exactly; large product spaces search shells
    outward from x; Gaussian spaces project onto structure-backed regions.
    Ties break to the smallest point index / canonical shell order.
    """
    if b < 0:
        raise ValueError(f"budget must be non-negative, got {b}")
    e = as_error_region(space, target)
    if e.contains(x):
        return x if not isinstance(x, np.ndarray) else np.asarray(x, dtype=np.float64)
    if isinstance(space, GaussianSpace) and e.structure is None:
        raise UnsupportedSetShapeError(
            "continuous search needs a structure-backed error region"
        )
    hit = nearest_in_set(space, x, e, cap=b)
    if hit is None:
        return None
    d, witness = hit
    return witness if d <= b + _DIST_TOL else None


@dataclass(frozen=True)
class RobustnessReport:
    """Expected perturbation to reach the error region at target mass rho.

    When the requested rho falls between two risk levels of an atomic
    space, the achieved level rho_star = Risk_ell is used and echoed.
    """

    rho_requested: float
    rho: float
    value: float
    method: str
    radius: float
    exact: bool = True

    def to_json(self) -> dict:
        return {
            "rho_requested": self.rho_requested,
            "rho": self.rho,
            "rob": self.value,
            "method": self.method,
            "radius": self.radius,
            "exact": self.exact,
        }


def _distance_table(space: Space, target):
    e = as_error_region(space, target)
    if not space.enumerable:
        raise SpaceError("exact robustness needs an enumerable space")
    mask = e.ensure_mask()
    if not mask.any():
        raise RhoUnachievableError("the error region is empty; no risk level is reachable")
    d = set_distances(space, e)
    return d, _weights(space)


def rob_target(space: Space, target, rho: float) -> RobustnessReport:
    """Robustness via the risk-curve identity: with ell the least radius
    whose risk reaches rho and rho_star = Risk_ell,

        Rob_{rho_star} = rho_star * ell - sum_{k < ell} Risk_k * unit.
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    d, w = _distance_table(space, target)
    unit = space.unit
    steps = np.rint(d / unit).astype(np.int64)
    max_step = int(steps.max())
    risks = np.array([float(w[steps <= k].sum()) for k in range(max_step + 1)])
    ell = int(np.searchsorted(risks, rho - _FP_TOL, side="left"))
    if ell > max_step:
        ell = max_step  # risks[max_step] == 1 >= rho, only fp noise lands here
    rho_star = float(risks[ell])
    value = rho_star * ell * unit - float(risks[:ell].sum()) * unit
    return RobustnessReport(
        rho_requested=rho,
        rho=rho_star,
        value=max(0.0, value),
        method="curve-exact",
        radius=ell * unit,
    )


def rob_greedy_oracle(space: Space, target, rho: float) -> float:
    """Independent robustness oracle: accumulate whole distance shells
    outward from the error region until their mass reaches rho, and sum
    distance times mass.  Agrees with rob_target at the achieved level."""
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    d, w = _distance_table(space, target)
    order = np.argsort(d, kind="stable")
    total = 0.0
    covered = 0.0
    i = 0
    n = d.size
    while i < n and covered < rho - _FP_TOL:
        shell_d = d[order[i]]
        j = i
        while j < n and d[order[j]] <= shell_d + _FP_TOL:
            covered += float(w[order[j]])
            total += float(w[order[j]]) * float(d[order[j]])
            j += 1
        i = j
    if covered < rho - _FP_TOL:
        raise RhoUnachievableError(f"accumulated mass {covered} never reached rho={rho}")
    return total


@dataclass(frozen=True)
class CertificateFlags:
    """Which risk lower bounds a concentration profile certifies."""

    risk_ge_half: bool
    risk_ge_one_minus_gamma: bool
    alpha_b1: float
    alpha_b2: float


def _require_upper(profile: ConcentrationProfile):
    if not profile.certifiable:
        raise ValueError(
            f"certificates need an exact or upper profile, got sense={profile.sense!r}"
        )


def risk_certificate(
    profile: ConcentrationProfile, epsilon: float, b1: float, b2: float, gamma: float
) -> CertificateFlags:
    """Risk lower bounds from concentration: epsilon > alpha_hat(b1)
    certifies Risk_b1 > 1/2; adding gamma >= alpha_hat(b2) certifies
    Risk_{b1+b2} >= 1 - gamma.  False flags mean no certificate, never a
    refutation."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0,1), got {gamma}")
    _require_upper(profile)
    a1 = profile(b1)
    a2 = profile(b2)
    # the strict premise must clear a margin: its conclusion genuinely
    # fails at equality, so rounding noise must never decide it
    half = epsilon > a1 + _FP_TOL
    return CertificateFlags(half, half and gamma >= a2, a1, a2)


def rob_upper_bound(
    profile: ConcentrationProfile, epsilon: float, rho: float, b1: float, b2: float
) -> float:
    """Certified Rob_rho <= (1 - epsilon) * b1 + integral_0^b2 alpha_hat,
    valid when epsilon > alpha_hat(b1) and 1 - rho >= alpha_hat(b2)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0,1], got {rho}")
    _require_upper(profile)
    a1 = profile(b1)
    a2 = profile(b2)
    if not epsilon > a1 + _FP_TOL:
        raise NoCertificateError(f"epsilon={epsilon} does not exceed alpha_hat(b1)={a1}")
    if not (1.0 - rho) >= a2 - _FP_TOL:
        raise NoCertificateError(f"1-rho={1-rho} is below alpha_hat(b2)={a2}")
    return (1.0 - epsilon) * b1 + profile.integral(b2)


@dataclass(frozen=True)
class LevyAttackBounds:
    """Closed-form thresholds on the normalized scale for profiles
    alpha_hat(b) = min(1, k1 exp(-k2 b^2 n)).

    b_to_one_minus_gamma follows the sum-of-roots composition (each stage
    certified separately), which dominates the single-root variant also
    reported for reference.
    """

    b_half: float
    b_to_one_minus_gamma: float
    b_to_one_minus_gamma_single_root: float
    rob_upper: float

    def to_json(self) -> dict:
        return {
            "b_half": self.b_half,
            "b_to_one_minus_gamma": self.b_to_one_minus_gamma,
            "b_to_one_minus_gamma_single_root": self.b_to_one_minus_gamma_single_root,
            "rob_upper": self.rob_upper,
        }


def levy_attack_bounds(
    params: LevyParams, epsilon: float, gamma: float, rho: float
) -> LevyAttackBounds:
    """Evaluate the closed forms: budget sqrt(ln(k1/eps))/sqrt(k2 n) pushes
    risk past 1/2; adding sqrt(ln(k1/gamma))/sqrt(k2 n) reaches 1 - gamma;
    and for rho in [1/2, 1)

        Rob_rho <= ((1-eps) sqrt(ln(k1/eps))
                    + erf(sqrt(ln(k1/(1-rho)))) k1 sqrt(pi)/2) / sqrt(k2 n).
    """
    k1, k2, n = params.k1, params.k2, params.n
    if not 0.0 < epsilon < k1:
        raise ValueError(f"epsilon must lie in (0, k1), got {epsilon}")
    if not 0.0 < gamma < k1:
        raise ValueError(f"gamma must lie in (0, k1), got {gamma}")
    if not 0.5 <= rho < 1.0:
        raise ValueError(f"rho must lie in [1/2, 1), got {rho}")
    root = math.sqrt(k2 * n)
    t_eps = math.log(k1 / epsilon)
    t_gam = math.log(k1 / gamma)
    b_half = math.sqrt(t_eps) / root
    b_sum = (math.sqrt(t_eps) + math.sqrt(t_gam)) / root
    b_single = math.sqrt(t_eps + t_gam) / root
    rob = (
        (1.0 - epsilon) * math.sqrt(t_eps)
        + math.erf(math.sqrt(math.log(k1 / (1.0 - rho)))) * k1 * math.sqrt(math.pi) / 2.0
    ) / root
    return LevyAttackBounds(b_half, b_sum, b_single, rob)
