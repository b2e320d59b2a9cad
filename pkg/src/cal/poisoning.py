"""Plausible data-poisoning adversaries against deterministic learners.

A training set is an ordered vector of m correctly-labeled examples, so
the space of training sets is the m-fold product of the instance space
with itself; substituting one example moves one coordinate.  The failure
set F collects the training sets whose learned hypothesis is bad (risk
above epsilon, or misclassifying a chosen point).  Two attackers:

* budget: replace at most b examples, reaching F whenever the training
  set lies within distance b of it;
* average: always reach F, paying exactly the distance to it.

Because replacements carry their true concept label, poisoned sets stay
plausible.  The confidence Conf_A (probability of low risk under attack)
and chosen-instance error Err_A are computed exactly on enumerable
fixtures and by seeded Monte Carlo otherwise.  Closed-form budgets follow
the bounded-difference tail: distance to a set of mass eps in an m-fold
product concentrates, so sqrt(-ln(eps) m / 2) bounds the mean distance
and sqrt(-ln(delta gamma) m) bounds the quantile the budget attack needs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import FailureSetEmptyError, SpaceError, SpaceTooLargeError
from .learners import LabeledExample, Learner, TrainingSet
from .rng import stream
from .spaces import (
    ENUMERATION_CAP,
    HAMMING,
    EventSet,
    ProductSpace,
    Space,
    measure,
    set_distances,
)

__all__ = [
    "FailurePredicate",
    "risk_exceeds",
    "misclassifies",
    "custom_failure",
    "PoisonReport",
    "Estimate",
    "training_space",
    "training_set_from_digits",
    "digits_from_training_set",
    "failure_mask",
    "baseline_failure_rate",
    "distance_to_failure",
    "attack_budget",
    "attack_average",
    "identity_adversary",
    "budget_adversary",
    "average_adversary",
    "conf_exact",
    "conf_estimate",
    "err_exact",
    "err_estimate",
    "mean_failure_distance",
    "budget_formula",
    "avg_budget_formula",
    "chosen_budget_formula",
    "budget_formula_variants",
    "mean_distance_check",
    "MeanDistanceReport",
]

_FP_TOL = 1e-12


# ---------------------------------------------------------------------------
# failure predicates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FailurePredicate:
    """Deterministic bad-event test over (training set, hypothesis)."""

    kind: str
    fn: Callable

    def __call__(self, ts: TrainingSet, hypothesis) -> bool:
        return bool(self.fn(ts, hypothesis))


def risk_exceeds(space: Space, concept: Callable, epsilon: float,
                 samples: int | None = None, seed: int = 0) -> FailurePredicate:
    """Failure = learned risk above epsilon.  Exact measure on enumerable
    spaces; fixed-seed Monte Carlo elsewhere so the predicate stays
    deterministic."""
    if space.enumerable:
        pts = list(space.iter_points())
        w = space.point_weights()

        def fn(ts, h):
            bad = np.fromiter((h(p) != concept(p) for p in pts), dtype=bool, count=len(pts))
            return float(w[bad].sum()) > epsilon + _FP_TOL

    else:
        if not samples:
            raise ValueError("a sample count is required on non-enumerable spaces")
        rows = space.sample(samples, seed)
        frozen = [tuple(int(v) for v in r) for r in rows]

        def fn(ts, h):
            bad = sum(1 for p in frozen if h(p) != concept(p))
            return bad / len(frozen) > epsilon

    return FailurePredicate("risk-exceeds", fn)


def misclassifies(x, concept: Callable) -> FailurePredicate:
    """Failure = hypothesis gets the chosen instance wrong."""
    return FailurePredicate("misclassifies", lambda ts, h: h(x) != concept(x))


def custom_failure(fn: Callable) -> FailurePredicate:
    return FailurePredicate("custom", fn)


# ---------------------------------------------------------------------------
# the training-set product space
# ---------------------------------------------------------------------------


def training_space(space: Space, m: int) -> ProductSpace:
    """The m-fold product of the instance space with itself: coordinate i
    is the index of the i-th training instance, weighted by mu."""
    n_pts = space.num_points()
    if n_pts is None:
        raise SpaceTooLargeError("training products need an enumerable instance space")
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    if n_pts ** m > ENUMERATION_CAP:
        raise SpaceTooLargeError(
            f"{n_pts}^{m} training sets exceed the enumeration cap {ENUMERATION_CAP}"
        )
    w = [float(v) for v in space.point_weights()]
    return ProductSpace([w] * m, metric=HAMMING)


def training_set_from_digits(space: Space, concept: Callable, digits) -> TrainingSet:
    pts = [space.point(int(i)) for i in digits]
    return TrainingSet(tuple(LabeledExample(p, concept(p)) for p in pts))


def digits_from_training_set(space: Space, ts: TrainingSet) -> tuple:
    return tuple(space.index_of(ex.instance) for ex in ts)


class _HypothesisCache:
    """Memoized learner.train keyed by the instance-index vector."""

    def __init__(self, space: Space, concept: Callable, learner: Learner):
        self.space = space
        self.concept = concept
        self.learner = learner
        self._cache: dict = {}

    def for_digits(self, digits: tuple):
        h = self._cache.get(digits)
        if h is None:
            h = self.learner.train(training_set_from_digits(self.space, self.concept, digits))
            self._cache[digits] = h
        return h


def failure_mask(
    space: Space, concept: Callable, learner: Learner, pred: FailurePredicate, m: int
) -> tuple[ProductSpace, np.ndarray]:
    """Enumerate all training sets and mark those the predicate rejects."""
    tspace = training_space(space, m)
    rows = tspace.digit_matrix()
    mask = np.empty(rows.shape[0], dtype=bool)
    for i in range(rows.shape[0]):
        digits = tuple(int(v) for v in rows[i])
        ts = training_set_from_digits(space, concept, digits)
        mask[i] = pred(ts, learner.train(ts))
    return tspace, mask


def baseline_failure_rate(
    space: Space, concept: Callable, learner: Learner, pred: FailurePredicate, m: int
) -> float:
    """delta = Pr over T of landing in the failure set, exactly."""
    tspace, mask = failure_mask(space, concept, learner, pred, m)
    return float(tspace.point_weights()[mask].sum())


def mean_failure_distance(
    space: Space, concept: Callable, learner: Learner, pred: FailurePredicate, m: int
) -> float:
    """E[HD(T, F)] over the training draw, exactly; the average attacker
    pays exactly this much."""
    tspace, mask = failure_mask(space, concept, learner, pred, m)
    if not mask.any():
        raise FailureSetEmptyError("the failure predicate rejects no training set")
    d = set_distances(tspace, EventSet.from_mask(tspace, mask))
    return float(np.dot(tspace.point_weights(), d))


# ---------------------------------------------------------------------------
# attacks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoisonReport:
    """Outcome of one attack call."""

    attacked: TrainingSet
    substitutions: int
    plausible: bool
    in_failure_set: bool
    budget_cap: float | None
    case: str
    mode: str

    def to_json(self) -> dict:
        return {
            "substitutions": self.substitutions,
            "plausible": self.plausible,
            "in_failure_set": self.in_failure_set,
            "budget_cap": self.budget_cap,
            "case": self.case,
            "mode": self.mode,
            "attacked": self.attacked.to_json(),
        }


def _replacement_examples(space: Space, concept: Callable) -> list:
    return [LabeledExample(p, concept(p)) for p in space.iter_points()]


def distance_to_failure(
    ts: TrainingSet,
    pred: FailurePredicate,
    learner: Learner,
    concept: Callable,
    space: Space,
    cap: int | None = None,
    mode: str = "exhaustive",
    seed: int = 0,
    proposals: int = 2000,
    beam_width: int = 32,
):
    """Fewest example substitutions landing in the failure set.

    Exhaustive mode scans substitution shells in canonical order (positions
    ascending, replacement instances by index) and is exact; "sampled" and
    "beam" return witnesses that only upper-bound the distance.  Returns
    (distance, witness) or None once the cap is passed.
    """
    m = ts.m
    cap = m if cap is None else min(cap, m)
    if cap < 0:
        raise ValueError(f"cap must be non-negative, got {cap}")
    pool = _replacement_examples(space, concept)
    memo: dict = {}

    def hit(candidate: TrainingSet) -> bool:
        key = tuple(ex.instance for ex in candidate)
        got = memo.get(key)
        if got is None:
            got = pred(candidate, learner.train(candidate))
            memo[key] = got
        return got

    if hit(ts):
        return 0, ts
    if mode == "exhaustive":
        for k in range(1, cap + 1):
            for positions in itertools.combinations(range(m), k):
                options = [
                    [ex for ex in pool if ex != ts.examples[i]] for i in positions
                ]
                for repl in itertools.product(*options):
                    cand = ts
                    for i, ex in zip(positions, repl):
                        cand = cand.replace(i, ex)
                    if hit(cand):
                        return k, cand
        return None
    if mode == "sampled":
        if cap == 0:
            return None  # no substitutions allowed; ts itself was checked above
        rng = stream(seed, 3)
        best = None
        for _ in range(proposals):
            k = int(rng.integers(1, cap + 1))
            positions = rng.choice(m, size=k, replace=False)
            cand = ts
            for i in sorted(int(p) for p in positions):
                cand = cand.replace(i, pool[int(rng.integers(0, len(pool)))])
            d = ts.hamming(cand)
            if d <= cap and hit(cand) and (best is None or d < best[0]):
                best = (d, cand)
        return best
    if mode == "beam":
        frontier = [ts]
        seen = {tuple(ex.instance for ex in ts)}
        for k in range(1, cap + 1):
            nxt = []
            for base in frontier:
                for i in range(m):
                    for ex in pool:
                        if ex == base.examples[i]:
                            continue
                        cand = base.replace(i, ex)
                        if ts.hamming(cand) != k:
                            continue
                        key = tuple(e.instance for e in cand)
                        if key in seen:
                            continue
                        seen.add(key)
                        if hit(cand):
                            return k, cand
                        nxt.append(cand)
            frontier = nxt[:beam_width]
            if not frontier:
                break
        return None
    raise ValueError(f"unknown search mode {mode!r}")


def attack_budget(
    ts: TrainingSet,
    pred: FailurePredicate,
    learner: Learner,
    concept: Callable,
    space: Space,
    b: float,
    mode: str = "exhaustive",
    seed: int = 0,
) -> PoisonReport:
    """Move into the failure set iff it lies within b substitutions; else
    leave the training set untouched."""
    if b < 0:
        raise ValueError(f"budget must be non-negative, got {b}")
    cap = int(math.floor(b + _FP_TOL))
    hit = distance_to_failure(ts, pred, learner, concept, space, cap=cap, mode=mode, seed=seed)
    if hit is not None:
        k, witness = hit
        return PoisonReport(
            attacked=witness,
            substitutions=k,
            plausible=witness.plausible(concept),
            in_failure_set=True,
            budget_cap=b,
            case="moved",
            mode=mode,
        )
    case = "unchanged" if mode == "exhaustive" else "unchanged-heuristic"
    return PoisonReport(ts, 0, ts.plausible(concept), False, b, case, mode)


def attack_average(
    ts: TrainingSet,
    pred: FailurePredicate,
    learner: Learner,
    concept: Callable,
    space: Space,
    mode: str = "exhaustive",
    seed: int = 0,
) -> PoisonReport:
    """Always land in the failure set, paying the exact distance to it."""
    hit = distance_to_failure(ts, pred, learner, concept, space, cap=ts.m, mode=mode, seed=seed)
    if hit is None:
        raise FailureSetEmptyError(
            "no reachable training set fails"
            + ("" if mode == "exhaustive" else f" (heuristic {mode} search)")
        )
    k, witness = hit
    return PoisonReport(
        attacked=witness,
        substitutions=k,
        plausible=witness.plausible(concept),
        in_failure_set=True,
        budget_cap=None,
        case="moved",
        mode=mode,
    )


# ---------------------------------------------------------------------------
# adversaries (training-set transformers)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Adversary:
    name: str
    transform: Callable

    def __call__(self, ts: TrainingSet) -> TrainingSet:
        return self.transform(ts)


def identity_adversary() -> _Adversary:
    return _Adversary("identity", lambda ts: ts)


def budget_adversary(
    pred: FailurePredicate, learner: Learner, concept: Callable, space: Space,
    b: float, mode: str = "exhaustive", seed: int = 0,
) -> _Adversary:
    def transform(ts):
        return attack_budget(ts, pred, learner, concept, space, b, mode=mode, seed=seed).attacked

    return _Adversary(f"budget({b:g})", transform)


def average_adversary(
    pred: FailurePredicate, learner: Learner, concept: Callable, space: Space,
    mode: str = "exhaustive", seed: int = 0,
) -> _Adversary:
    def transform(ts):
        return attack_average(ts, pred, learner, concept, space, mode=mode, seed=seed).attacked

    return _Adversary("average", transform)


# ---------------------------------------------------------------------------
# confidence and chosen-instance error
# ---------------------------------------------------------------------------


def _exact_risk(space: Space, concept: Callable, h) -> float:
    pts = list(space.iter_points())
    w = space.point_weights()
    bad = np.fromiter((h(p) != concept(p) for p in pts), dtype=bool, count=len(pts))
    return float(w[bad].sum())


def conf_exact(
    space: Space,
    concept: Callable,
    learner: Learner,
    epsilon: float,
    m: int,
    adversary_kind: str = "identity",
    b: float | None = None,
    pred: FailurePredicate | None = None,
) -> float:
    """Conf_A = Pr over T of Risk(L(A(T))) <= epsilon, by full enumeration.

    The budget attack succeeds exactly on training sets within b of the
    failure set, so Conf_A is the mass beyond distance b; the average
    attack always succeeds, so Conf_A is 0 unless F is empty.
    """
    pred = pred or risk_exceeds(space, concept, epsilon)
    tspace, mask = failure_mask(space, concept, learner, pred, m)
    w = tspace.point_weights()
    if adversary_kind == "identity":
        return 1.0 - float(w[mask].sum())
    if adversary_kind == "average":
        return 0.0 if mask.any() else 1.0
    if adversary_kind == "budget":
        if b is None:
            raise ValueError("the budget adversary needs b")
        if not mask.any():
            return 1.0
        d = set_distances(tspace, EventSet.from_mask(tspace, mask))
        return 1.0 - float(w[d <= math.floor(b + _FP_TOL) + _FP_TOL].sum())
    raise ValueError(f"unknown adversary kind {adversary_kind!r}")


def err_exact(
    space: Space,
    concept: Callable,
    learner: Learner,
    x,
    m: int,
    adversary_kind: str = "identity",
    b: float | None = None,
) -> float:
    """Err_A = Pr over T of h(x) != c(x) with h = L(A(T)), by enumeration."""
    pred = misclassifies(x, concept)
    tspace, mask = failure_mask(space, concept, learner, pred, m)
    w = tspace.point_weights()
    if adversary_kind == "identity":
        return float(w[mask].sum())
    if adversary_kind == "average":
        return 1.0 if mask.any() else 0.0
    if adversary_kind == "budget":
        if b is None:
            raise ValueError("the budget adversary needs b")
        if not mask.any():
            return 0.0
        d = set_distances(tspace, EventSet.from_mask(tspace, mask))
        return float(w[d <= math.floor(b + _FP_TOL) + _FP_TOL].sum())
    raise ValueError(f"unknown adversary kind {adversary_kind!r}")


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with per-trial rows (trial, substitutions,
    bad event flag)."""

    value: float
    halfwidth: float
    trials: int
    rows: tuple

    def to_json(self) -> dict:
        return {"value": self.value, "halfwidth": self.halfwidth, "trials": self.trials}


def _sample_training_set(space: Space, concept: Callable, m: int, seed: int, trial: int) -> TrainingSet:
    rng = stream(seed, trial)
    idx = rng.choice(space.num_points(), size=m, p=space.point_weights())
    return training_set_from_digits(space, concept, (int(i) for i in idx))


def conf_estimate(
    space: Space,
    concept: Callable,
    learner: Learner,
    epsilon: float,
    m: int,
    adversary,
    trials: int,
    seed: int = 0,
) -> Estimate:
    """Monte Carlo Conf_A over seeded training draws; trial t uses the
    derived stream (seed, t), so results are worker-partitionable."""
    if trials < 1:
        raise ValueError("at least one trial is required")
    rows = []
    good = 0
    for t in range(trials):
        ts = _sample_training_set(space, concept, m, seed, t)
        attacked = adversary(ts)
        h = learner.train(attacked)
        bad = _exact_risk(space, concept, h) > epsilon + _FP_TOL
        good += not bad
        rows.append((t, ts.hamming(attacked), bool(bad)))
    p = good / trials
    return Estimate(p, 1.96 * math.sqrt(max(p * (1 - p), 0.0) / trials), trials, tuple(rows))


def err_estimate(
    space: Space,
    concept: Callable,
    learner: Learner,
    x,
    m: int,
    adversary,
    trials: int,
    seed: int = 0,
) -> Estimate:
    """Monte Carlo Err_A at the chosen instance x."""
    if trials < 1:
        raise ValueError("at least one trial is required")
    rows = []
    bads = 0
    for t in range(trials):
        ts = _sample_training_set(space, concept, m, seed, t)
        attacked = adversary(ts)
        h = learner.train(attacked)
        bad = h(x) != concept(x)
        bads += bad
        rows.append((t, ts.hamming(attacked), bool(bad)))
    p = bads / trials
    return Estimate(p, 1.96 * math.sqrt(max(p * (1 - p), 0.0) / trials), trials, tuple(rows))


# ---------------------------------------------------------------------------
# closed-form budgets
# ---------------------------------------------------------------------------


def _check_unit(name: str, v: float):
    if not 0.0 < v < 1.0:
        raise ValueError(f"{name} must lie in (0,1), got {v}")


def budget_formula(delta: float, gamma: float, m: int) -> float:
    """sqrt(-ln(delta gamma) m): budget at which the b-attack leaves
    confidence at most gamma against a learner failing with rate delta."""
    _check_unit("delta", delta)
    _check_unit("gamma", gamma)
    return math.sqrt(-math.log(delta * gamma) * m)


def avg_budget_formula(delta: float, m: int) -> float:
    """sqrt(-ln(delta) m / 2): mean substitutions the average attack pays."""
    _check_unit("delta", delta)
    return math.sqrt(-math.log(delta) * m / 2.0)


def chosen_budget_formula(epsilon: float, gamma: float, m: int) -> float:
    """sqrt(-ln(epsilon gamma) m): budget pushing chosen-instance error
    past 1 - gamma when the baseline error is epsilon."""
    _check_unit("epsilon", epsilon)
    _check_unit("gamma", gamma)
    return math.sqrt(-math.log(epsilon * gamma) * m)


def budget_formula_variants(delta: float, gamma: float, m: int) -> dict:
    """Both typographies seen for the budget bounds; the derivation-backed
    forms (keys without suffix) are the ones the attacks use."""
    _check_unit("delta", delta)
    _check_unit("gamma", gamma)
    return {
        "budget": budget_formula(delta, gamma, m),
        "budget_m_outside_root": math.sqrt(-math.log(delta * gamma)) * m,
        "avg_budget": avg_budget_formula(delta, m),
        "avg_budget_m_outside_root": math.sqrt(-math.log(delta)) * m / 2.0,
        "avg_budget_no_half": math.sqrt(-math.log(delta) * m),
    }


# ---------------------------------------------------------------------------
# mean-distance concentration check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanDistanceReport:
    mean: float
    bound: float
    epsilon: float
    holds: bool
    exact: bool
    samples: int | None = None
    stderr: float = 0.0


def mean_distance_check(
    space: ProductSpace, s: EventSet, samples: int | None = None, seed: int = 0
) -> MeanDistanceReport:
    """Check E[HD(x, S)] <= sqrt(-ln(mu(S)) m / 2) on an m-fold product.

    Distances count substitutions.  Exact on enumerable products; Monte
    Carlo with a 3-standard-error margin otherwise (structure-backed sets
    only, so per-sample distances stay exact).
    """
    if not isinstance(space, ProductSpace):
        raise SpaceError("the mean-distance bound needs a product space")
    m = space.n
    est = measure(space, s, samples=samples, seed=seed)
    eps = est.value
    if eps <= 0.0:
        raise FailureSetEmptyError("the set has no mass; distances are unbounded")
    bound = math.sqrt(-math.log(min(eps, 1.0)) * m / 2.0)
    if space.enumerable:
        d = set_distances(space, s) / space.unit
        mean = float(np.dot(space.point_weights(), d))
        return MeanDistanceReport(mean, bound, eps, mean <= bound + _FP_TOL, True)
    if s.structure is None:
        raise SpaceError("Monte Carlo mean distances need a structure-backed set")
    if not samples:
        raise ValueError("a positive sample count is required on non-enumerable spaces")
    rows = space.sample(samples, seed, index=1)
    d = np.fromiter(
        (s.structure.distance(space, tuple(int(v) for v in r)) / space.unit for r in rows),
        dtype=np.float64,
        count=samples,
    )
    mean = float(d.mean())
    stderr = float(d.std(ddof=1)) / math.sqrt(samples) if samples > 1 else 0.0
    return MeanDistanceReport(
        mean, bound, eps, mean <= bound + 3.0 * stderr + _FP_TOL, False, samples, stderr
    )
