"""Deterministic toy learners for poisoning experiments.

Each learner maps an ordered training set to a frozen hypothesis object;
identical training sets yield identical (comparable) hypotheses, which the
attack machinery relies on.  Shipped fixtures:

* threshold learner on a one-dimensional discrete line: the hypothesis is
  the midpoint threshold between the largest instance labeled 0 and the
  smallest labeled 1;
* majority learner: the constant hypothesis of the most frequent label;
* one-nearest-neighbor under Hamming distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from .spaces import Space

__all__ = [
    "LabeledExample",
    "TrainingSet",
    "Learner",
    "ThresholdHypothesis",
    "ConstantHypothesis",
    "NearestNeighborHypothesis",
    "interval_learner",
    "majority_learner",
    "nn_learner",
    "label_all",
    "all_training_sets",
]


@dataclass(frozen=True)
class LabeledExample:
    instance: tuple
    label: object

    def __post_init__(self):
        if not isinstance(self.instance, tuple):
            raise TypeError("instances must be points (tuples)")


@dataclass(frozen=True)
class TrainingSet:
    """An ordered vector of m labeled examples; distance between two sets
    of equal length is the number of differing coordinates."""

    examples: tuple

    def __post_init__(self):
        if not self.examples:
            raise ValueError("training sets must be non-empty")
        for ex in self.examples:
            if not isinstance(ex, LabeledExample):
                raise TypeError("examples must be LabeledExample instances")

    @property
    def m(self) -> int:
        return len(self.examples)

    def hamming(self, other: "TrainingSet") -> int:
        if self.m != other.m:
            raise ValueError("training sets must have equal length")
        return sum(a != b for a, b in zip(self.examples, other.examples))

    def replace(self, i: int, example: LabeledExample) -> "TrainingSet":
        items = list(self.examples)
        items[i] = example
        return TrainingSet(tuple(items))

    def plausible(self, concept: Callable) -> bool:
        return all(ex.label == concept(ex.instance) for ex in self.examples)

    def to_json(self) -> list:
        return [[list(ex.instance), ex.label] for ex in self.examples]

    def __iter__(self):
        return iter(self.examples)


@dataclass(frozen=True)
class Learner:
    """A named deterministic training function."""

    name: str
    train: Callable


def label_all(points: Sequence[tuple], concept: Callable) -> TrainingSet:
    return TrainingSet(tuple(LabeledExample(p, concept(p)) for p in points))


def all_training_sets(space: Space, concept: Callable, m: int) -> Iterator[TrainingSet]:
    """Every correctly-labeled training vector of length m, in the mixed-
    radix index order of the instance space."""
    pts = list(space.iter_points())
    examples = [LabeledExample(p, concept(p)) for p in pts]

    def rec(prefix):
        if len(prefix) == m:
            yield TrainingSet(tuple(prefix))
            return
        for ex in examples:
            yield from rec(prefix + [ex])

    yield from rec([])


# ---------------------------------------------------------------------------
# hypotheses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdHypothesis:
    """Label 1 for one-coordinate instances strictly above the threshold."""

    threshold: float

    def __call__(self, x) -> int:
        return int(x[0] > self.threshold)


@dataclass(frozen=True)
class ConstantHypothesis:
    label: object

    def __call__(self, x):
        return self.label


@dataclass(frozen=True)
class NearestNeighborHypothesis:
    """1-NN under Hamming distance; ties break to the lexicographically
    smallest instance, then the smallest label."""

    examples: tuple

    def __call__(self, x):
        best = min(
            (sum(a != b for a, b in zip(x, ex.instance)), ex.instance, repr(ex.label), ex.label)
            for ex in self.examples
        )
        return best[3]


# ---------------------------------------------------------------------------
# learners
# ---------------------------------------------------------------------------


def _train_threshold(ts: TrainingSet) -> ThresholdHypothesis:
    zeros = [ex.instance[0] for ex in ts if ex.label == 0]
    ones = [ex.instance[0] for ex in ts if ex.label == 1]
    if not ones:
        return ThresholdHypothesis(math.inf)
    if not zeros:
        return ThresholdHypothesis(-math.inf)
    return ThresholdHypothesis((max(zeros) + min(ones)) / 2.0)


def _train_majority(ts: TrainingSet) -> ConstantHypothesis:
    counts = {}
    for ex in ts:
        counts[ex.label] = counts.get(ex.label, 0) + 1
    top = max(counts.values())
    winner = min((lab for lab, c in counts.items() if c == top), key=repr)
    return ConstantHypothesis(winner)


def _train_nn(ts: TrainingSet) -> NearestNeighborHypothesis:
    return NearestNeighborHypothesis(ts.examples)


def interval_learner() -> Learner:
    """Midpoint-threshold learner for 1-coordinate instances with labels in
    {0, 1}; all-one samples predict 1 everywhere, all-zero samples 0."""
    return Learner("interval", _train_threshold)


def majority_learner() -> Learner:
    """Constant hypothesis carrying the most frequent training label; ties
    break to the smallest label repr."""
    return Learner("majority", _train_majority)


def nn_learner() -> Learner:
    """One-nearest-neighbor on Hamming instances."""
    return Learner("nn", _train_nn)
