"""Prediction-change risk and robustness: concept-free quantities that ask
only whether small perturbations can flip the hypothesis's own label.

    Risk_b^PC      mass of points with a differently-labeled point within b
    Risk_b^l       mass of points within b of the label-l region
    Rob^PC         E[d(x, complement of the region of h(x))]
    Rob^l          E[d(x, label-l region)]

Certificates reuse the concentration machinery: if every label's mass is
at most 1 - eps, a label subset of mass in (eps/2, 1/2] exists and both it
and its complement expand to near-full measure, forcing PC risk toward 1;
robustness is bounded by a radius that reaches PC risk 1/2 plus the full
integral of the concentration profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .concentration import ConcentrationProfile, LevyParams
from .errors import NoCertificateError, NoPartitionError, SpaceError, SpaceTooLargeError
from .spaces import (
    EventSet,
    ProductSpace,
    Space,
    expand,
    measure,
    set_distances,
)

__all__ = [
    "label_regions",
    "label_masses",
    "pc_risk",
    "target_label_risk",
    "pc_rob",
    "target_label_rob",
    "split_labels_for_attack",
    "PcCertificatePart",
    "PcCertificates",
    "pc_certificates",
    "levy_pc_thresholds",
]

_FP_TOL = 1e-12
_DIST_TOL = 1e-9


def label_regions(space: Space, h: Callable, labels: Sequence) -> dict:
    """The events {x : h(x) = l} for each label; they partition the space."""
    regions = {}
    for lab in labels:
        regions[lab] = EventSet.from_predicate(
            space,
            lambda p, _l=lab: h(p) == _l,
            label=f"label-{lab}",
            materialize=True if space.enumerable else None,
        )
    return regions


def label_masses(
    space: Space, h: Callable, labels: Sequence, samples: int | None = None, seed: int = 0
) -> dict:
    """mu(h^l) per label (floats; exact on enumerable spaces)."""
    out = {}
    for lab, region in label_regions(space, h, labels).items():
        out[lab] = measure(space, region, samples=samples, seed=seed).value
    return out


def _label_vector(space: Space, h: Callable, labels: Sequence) -> np.ndarray:
    seen = list(labels)
    idx = {lab: i for i, lab in enumerate(seen)}
    out = np.empty(space.num_points(), dtype=np.int64)
    for i, p in enumerate(space.iter_points()):
        lab = h(p)
        if lab not in idx:
            raise ValueError(f"hypothesis emitted {lab!r}, not in the declared labels")
        out[i] = idx[lab]
    return out


def _flip_distances(space: Space, h: Callable, labels: Sequence) -> np.ndarray:
    """Per point, exact distance to the nearest differently-labeled point
    (inf when h is constant)."""
    if not space.enumerable:
        raise SpaceTooLargeError("exact prediction-change tables need an enumerable space")
    lv = _label_vector(space, h, labels)
    n_pts = lv.size
    d = np.full(n_pts, np.inf)
    for li in np.unique(lv):
        other = EventSet.from_mask(space, lv != li, label=f"not-{li}")
        if not other.mask.any():
            continue
        dl = set_distances(space, other)
        sel = lv == li
        d[sel] = dl[sel]
    return d


def pc_risk(
    space: Space, h: Callable, labels: Sequence, b: float,
    samples: int | None = None, seed: int = 0,
) -> float:
    """Mass of points whose b-ball contains a point the hypothesis labels
    differently.  Exact on enumerable spaces; Monte Carlo shell search
    otherwise (small b only, the shells grow combinatorially)."""
    if b < 0:
        raise ValueError(f"budget must be non-negative, got {b}")
    if space.enumerable:
        d = _flip_distances(space, h, labels)
        w = space.point_weights()
        return float(w[d <= b + _DIST_TOL].sum())
    if not samples:
        raise ValueError("a positive sample count is required on non-enumerable spaces")
    if not isinstance(space, ProductSpace):
        raise SpaceError("sampled prediction-change risk needs a product space")
    from .spaces import _shell_search  # same canonical shell order as the attack

    rows = space.sample(samples, seed)
    hits = 0
    for r in rows:
        x = tuple(int(v) for v in r)
        flip = EventSet(space, predicate=lambda p, _x=x: h(p) != h(_x))
        if _shell_search(space, x, flip, int(b / space.unit + _DIST_TOL)) is not None:
            hits += 1
    return hits / samples


def target_label_risk(
    space: Space, h: Callable, labels: Sequence, target, b: float,
    samples: int | None = None, seed: int = 0,
) -> float:
    """mu((h^l)_b): mass within b of the region the hypothesis labels l."""
    if target not in set(labels):
        raise ValueError(f"{target!r} is not one of the declared labels")
    if b < 0:
        raise ValueError(f"budget must be non-negative, got {b}")
    region = label_regions(space, h, labels)[target]
    if space.enumerable and not region.ensure_mask().any():
        return 0.0
    return measure(space, expand(space, region, b), samples=samples, seed=seed).value


def pc_rob(space: Space, h: Callable, labels: Sequence) -> float:
    """E[d(x, X minus h^{h(x)})]: mean perturbation that flips the label.
    Needs a non-constant hypothesis, else no flip exists."""
    d = _flip_distances(space, h, labels)
    if not np.all(np.isfinite(d)):
        raise ValueError("hypothesis is constant; no prediction change is reachable")
    w = space.point_weights()
    return float(np.dot(w, d))


def target_label_rob(space: Space, h: Callable, labels: Sequence, target) -> float:
    """E[d(x, h^l)]: mean perturbation to force label l everywhere."""
    if target not in set(labels):
        raise ValueError(f"{target!r} is not one of the declared labels")
    region = label_regions(space, h, labels)[target]
    if not region.ensure_mask().any():
        raise ValueError(f"the region of label {target!r} is empty")
    d = set_distances(space, region)
    w = space.point_weights()
    return float(np.dot(w, d))


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


def split_labels_for_attack(masses: Mapping, epsilon: float) -> tuple:
    """A label subset whose total mass lands in (eps/2, 1/2].

    Exists whenever every label's mass is at most 1 - eps: if one label
    exceeds half, the remaining labels jointly weigh in [eps, 1/2); else
    accumulating masses in decreasing order cannot overshoot 1/2 before
    crossing eps/2.  Deterministic order: mass descending, then label repr.
    """
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in [0, 1/2], got {epsilon}")
    items = sorted(masses.items(), key=lambda kv: (-kv[1], repr(kv[0])))
    if not items:
        raise NoPartitionError("no labels given")
    if items[0][1] > 1.0 - epsilon + _FP_TOL:
        raise NoPartitionError(
            f"label {items[0][0]!r} has mass {items[0][1]}, exceeding 1 - eps"
        )
    lo, hi = epsilon / 2.0, 0.5
    if items[0][1] > hi + _FP_TOL:
        rest = tuple(lab for lab, _ in items[1:])
        total = sum(m for _, m in items[1:])
        if lo < total <= hi + _FP_TOL and rest:
            return rest
        raise NoPartitionError("complement of the heavy label misses the window")
    chosen, total = [], 0.0
    for lab, m in items:
        if m <= 0:
            continue
        chosen.append(lab)
        total += m
        if total > lo:
            break
    if chosen and lo < total <= hi + _FP_TOL:
        return tuple(chosen)
    raise NoPartitionError(f"accumulated mass {total} missed ({lo}, {hi}]")


@dataclass(frozen=True)
class PcCertificatePart:
    """One certified inequality; `applies` False means no certificate was
    issued (never a refutation)."""

    applies: bool
    value: float | None = None
    radius: float | None = None
    detail: tuple = ()


@dataclass(frozen=True)
class PcCertificates:
    change_risk: PcCertificatePart
    target_risk: PcCertificatePart
    change_rob: PcCertificatePart
    target_rob: PcCertificatePart

    def any_applies(self) -> bool:
        return any(
            p.applies for p in (self.change_risk, self.target_risk, self.change_rob, self.target_rob)
        )

    def to_json(self) -> dict:
        def enc(p: PcCertificatePart) -> dict:
            return {"applies": p.applies, "value": p.value, "radius": p.radius,
                    "detail": list(p.detail)}

        return {
            "change_risk": enc(self.change_risk),
            "target_risk": enc(self.target_risk),
            "change_rob": enc(self.change_rob),
            "target_rob": enc(self.target_rob),
        }


def pc_certificates(
    profile: ConcentrationProfile,
    masses: Mapping,
    b1: float,
    b2: float,
    gamma: float,
    target_label=None,
    b: float | None = None,
    pc_risk_at_b: float | None = None,
    strict: bool = False,
) -> PcCertificates:
    """Evaluate the four prediction-change certificates.

    1. balanced labels (all masses <= 1-eps, eps the best value <= 1/2):
       alpha_hat(b1) < eps/2 and alpha_hat(b2) <= gamma/2 certify
       Risk^PC_{b1+b2} >= 1 - gamma, with the witness label split;
    2. alpha_hat(b1) < mu(h^l) and alpha_hat(b2) <= gamma certify
       Risk^l_{b1+b2} >= 1 - gamma;
    3. a measured Risk^PC_b >= 1/2 certifies
       Rob^PC <= b + integral_0^inf alpha_hat;
    4. alpha_hat(b) < mu(h^l) certifies Rob^l <= b + integral_0^inf alpha_hat.

    Parts lacking their inputs (target label, radius b, measured risk) are
    reported as not applying.  With strict=True an empty certificate set
    raises instead.

    Strict premises must clear a 1e-12 margin: the conclusions genuinely
    fail at equality, and summation-order noise must never nudge an
    equal-in-reals comparison across a strict threshold.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0,1), got {gamma}")
    if not profile.certifiable:
        raise ValueError(f"certificates need an exact or upper profile, got {profile.sense!r}")
    no = PcCertificatePart(False)

    eps_star = min(0.5, 1.0 - max(masses.values())) if masses else 0.0
    part1 = no
    if (
        eps_star > 0
        and profile(b1) < eps_star / 2.0 - _FP_TOL
        and profile(b2) <= gamma / 2.0 + _FP_TOL
    ):
        try:
            y1 = split_labels_for_attack(masses, eps_star)
        except NoPartitionError:
            y1 = None
        if y1 is not None:
            part1 = PcCertificatePart(True, 1.0 - gamma, b1 + b2, tuple(map(repr, y1)))

    part2 = no
    if target_label is not None and target_label in masses:
        m = masses[target_label]
        if profile(b1) < m - _FP_TOL and profile(b2) <= gamma + _FP_TOL:
            part2 = PcCertificatePart(True, 1.0 - gamma, b1 + b2)

    tail = None
    part3 = no
    if b is not None and pc_risk_at_b is not None and pc_risk_at_b >= 0.5:
        tail = profile.tail_integral(0.0)
        part3 = PcCertificatePart(True, b + tail, b)

    part4 = no
    if b is not None and target_label is not None and target_label in masses:
        if profile(b) < masses[target_label] - _FP_TOL:
            if tail is None:
                tail = profile.tail_integral(0.0)
            part4 = PcCertificatePart(True, b + tail, b)

    record = PcCertificates(part1, part2, part3, part4)
    if strict and not record.any_applies():
        raise NoCertificateError("no prediction-change certificate applies")
    return record


def levy_pc_thresholds(
    params: LevyParams, gamma: float, masses: Mapping | None = None, target_mass: float | None = None
) -> dict:
    """Closed-form radii at which the normal-family profile starts
    certifying: the balanced-label split needs
    b = (sqrt(ln(2 k1/eps)) + sqrt(ln(2 k1/gamma))) / sqrt(k2 n) and the
    target-label bound needs
    b = (sqrt(ln(k1/m)) + sqrt(ln(k1/gamma))) / sqrt(k2 n)."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0,1), got {gamma}")
    k1, k2, n = params.k1, params.k2, params.n
    root = math.sqrt(k2 * n)
    out = {}
    if masses:
        eps_star = min(0.5, 1.0 - max(masses.values()))
        if eps_star > 0:
            out["balanced_b"] = (
                math.sqrt(math.log(2.0 * k1 / eps_star)) + math.sqrt(math.log(2.0 * k1 / gamma))
            ) / root
            out["epsilon"] = eps_star
    if target_mass is not None:
        if not 0.0 < target_mass <= 1.0:
            raise ValueError(f"target mass must lie in (0,1], got {target_mass}")
        if target_mass < k1:
            out["target_b"] = (
                math.sqrt(math.log(k1 / target_mass)) + math.sqrt(math.log(k1 / gamma))
            ) / root
    return out
