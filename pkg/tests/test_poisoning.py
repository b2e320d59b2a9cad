"""Training-set poisoning: attacks, confidence, chosen-instance error,
closed-form budgets, and the mean-distance bound."""

import itertools
import math

import numpy as np
import pytest

from cal.errors import FailureSetEmptyError, SpaceError, SpaceTooLargeError
from cal.learners import (
    LabeledExample,
    TrainingSet,
    interval_learner,
    majority_learner,
    nn_learner,
)
from cal.poisoning import (
    attack_average,
    attack_budget,
    average_adversary,
    avg_budget_formula,
    baseline_failure_rate,
    budget_adversary,
    budget_formula,
    budget_formula_variants,
    chosen_budget_formula,
    conf_estimate,
    conf_exact,
    custom_failure,
    digits_from_training_set,
    distance_to_failure,
    err_estimate,
    err_exact,
    failure_mask,
    identity_adversary,
    mean_distance_check,
    mean_failure_distance,
    misclassifies,
    risk_exceeds,
    training_set_from_digits,
    training_space,
)
from cal.spaces import (
    EventSet,
    HAMMING,
    HammingBall,
    ball,
    build_explicit,
    build_hypercube,
    build_product,
)

# ---------------------------------------------------------------------------
# brute-force oracle over the 4-point line, m = 3 (64 training sets)
# ---------------------------------------------------------------------------

LINE = build_product([4])
CONCEPT = lambda x: int(x[0] >= 2)
LEARNER = interval_learner()
M = 3


def oracle_tables(epsilon):
    """Exhaustive failure set and distance table by plain loops: returns
    ({digits}, {digits: min substitutions to a failing vector})."""
    pts = [(i,) for i in range(4)]
    w = {p: 0.25 for p in pts}
    failing = set()
    for digits in itertools.product(range(4), repeat=M):
        ts = TrainingSet(tuple(LabeledExample((i,), CONCEPT((i,))) for i in digits))
        h = LEARNER.train(ts)
        risk = sum(w[p] for p in pts if h(p) != CONCEPT(p))
        if risk > epsilon + 1e-12:
            failing.add(digits)
    dist = {}
    for digits in itertools.product(range(4), repeat=M):
        if failing:
            dist[digits] = min(
                sum(a != b for a, b in zip(digits, f)) for f in failing
            )
        else:
            dist[digits] = math.inf
    return failing, dist


ORACLE_FAILING, ORACLE_DIST = oracle_tables(0.25)


def test_oracle_is_sane():
    # the all-correct interval learner fails on some but not all draws
    assert 0 < len(ORACLE_FAILING) < 64
    assert ORACLE_DIST[min(ORACLE_FAILING)] == 0
    assert max(ORACLE_DIST.values()) >= 1


class TestPredicatesAndSpace:
    def test_risk_exceeds_exact(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        ts = training_set_from_digits(LINE, CONCEPT, (0, 1, 2))
        h = LEARNER.train(ts)
        assert pred.kind == "risk-exceeds"
        assert pred(ts, h) == ((0, 1, 2) in ORACLE_FAILING)

    def test_misclassifies_and_custom(self):
        pred = misclassifies((0,), CONCEPT)
        ts = training_set_from_digits(LINE, CONCEPT, (2, 3, 3))
        h = LEARNER.train(ts)  # all-ones sample predicts 1 everywhere
        assert pred(ts, h)
        custom = custom_failure(lambda ts_, h_: len(ts_.examples) == 3)
        assert custom(ts, h) and custom.kind == "custom"

    def test_risk_exceeds_needs_samples_on_big_spaces(self):
        big = build_hypercube(40)
        with pytest.raises(ValueError):
            risk_exceeds(big, lambda p: 0, 0.1)
        pred = risk_exceeds(big, lambda p: 0, 0.1, samples=200, seed=1)
        ts = TrainingSet((LabeledExample((0,) * 40, 0),))
        assert not pred(ts, lambda p: 0)
        assert pred(ts, lambda p: 1)

    def test_training_space_shape(self):
        tspace = training_space(LINE, M)
        assert tspace.n == M
        assert tspace.num_points() == 64
        assert tspace.metric == HAMMING
        w = tspace.point_weights()
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert w[0] == pytest.approx(0.25**3, abs=1e-15)

    def test_training_space_guards(self):
        with pytest.raises(ValueError):
            training_space(LINE, 0)
        with pytest.raises(SpaceTooLargeError):
            training_space(LINE, 11)  # 4^11 > 2^20
        with pytest.raises(SpaceTooLargeError):
            training_space(build_hypercube(40), 2)

    def test_digits_round_trip(self):
        ts = training_set_from_digits(LINE, CONCEPT, (3, 0, 2))
        assert digits_from_training_set(LINE, ts) == (3, 0, 2)
        assert [ex.label for ex in ts] == [1, 0, 1]
        assert ts.plausible(CONCEPT)


class TestFailureGeometry:
    def test_failure_mask_matches_oracle(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        tspace, mask = failure_mask(LINE, CONCEPT, LEARNER, pred, M)
        rows = tspace.digit_matrix()
        for i in range(rows.shape[0]):
            digits = tuple(int(v) for v in rows[i])
            assert mask[i] == (digits in ORACLE_FAILING)

    def test_baseline_rate_matches_oracle(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        delta = baseline_failure_rate(LINE, CONCEPT, LEARNER, pred, M)
        assert delta == pytest.approx(len(ORACLE_FAILING) / 64.0, abs=1e-12)

    def test_mean_failure_distance_matches_oracle(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        got = mean_failure_distance(LINE, CONCEPT, LEARNER, pred, M)
        want = sum(ORACLE_DIST.values()) / 64.0
        assert got == pytest.approx(want, abs=1e-12)

    def test_empty_failure_set_raises(self):
        never = custom_failure(lambda ts, h: False)
        with pytest.raises(FailureSetEmptyError):
            mean_failure_distance(LINE, CONCEPT, LEARNER, never, M)


class TestAttacks:
    def test_exhaustive_distance_matches_oracle_everywhere(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        for digits in itertools.product(range(4), repeat=M):
            ts = training_set_from_digits(LINE, CONCEPT, digits)
            hit = distance_to_failure(ts, pred, LEARNER, CONCEPT, LINE)
            assert hit is not None
            k, witness = hit
            assert k == ORACLE_DIST[digits]
            assert ts.hamming(witness) == k
            assert pred(witness, LEARNER.train(witness))
            assert witness.plausible(CONCEPT)

    def test_cap_hides_distant_failures(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        far = max(ORACLE_DIST, key=ORACLE_DIST.get)
        ts = training_set_from_digits(LINE, CONCEPT, far)
        assert distance_to_failure(ts, pred, LEARNER, CONCEPT, LINE,
                                   cap=ORACLE_DIST[far] - 1) is None

    def test_witness_is_deterministic(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        ts = training_set_from_digits(LINE, CONCEPT, (0, 1, 0))
        a = distance_to_failure(ts, pred, LEARNER, CONCEPT, LINE)
        b = distance_to_failure(ts, pred, LEARNER, CONCEPT, LINE)
        assert a == b

    @pytest.mark.parametrize("mode", ["sampled", "beam"])
    def test_heuristic_modes_upper_bound_the_truth(self, mode):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        for digits in [(0, 0, 0), (0, 1, 2), (3, 3, 3), (1, 1, 2)]:
            ts = training_set_from_digits(LINE, CONCEPT, digits)
            hit = distance_to_failure(
                ts, pred, LEARNER, CONCEPT, LINE, mode=mode, seed=4
            )
            if hit is None:
                continue
            k, witness = hit
            assert k >= ORACLE_DIST[digits]
            assert ts.hamming(witness) == k
            assert pred(witness, LEARNER.train(witness))

    def test_budget_attack_report(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        for digits in itertools.product(range(4), repeat=M):
            ts = training_set_from_digits(LINE, CONCEPT, digits)
            true_d = ORACLE_DIST[digits]
            for b in (0.0, 1.0, 1.5, 3.0):
                report = attack_budget(ts, pred, LEARNER, CONCEPT, LINE, b)
                assert report.mode == "exhaustive"
                assert report.budget_cap == b
                assert report.plausible
                if true_d <= math.floor(b):
                    assert report.case == "moved"
                    assert report.in_failure_set
                    assert report.substitutions == true_d
                    assert ts.hamming(report.attacked) == true_d
                else:
                    assert report.case == "unchanged"
                    assert not report.in_failure_set
                    assert report.attacked == ts
                    assert report.substitutions == 0
        with pytest.raises(ValueError):
            attack_budget(ts, pred, LEARNER, CONCEPT, LINE, -1.0)

    def test_average_attack_always_lands(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        for digits in [(0, 0, 0), (2, 2, 2), (0, 1, 3)]:
            ts = training_set_from_digits(LINE, CONCEPT, digits)
            report = attack_average(ts, pred, LEARNER, CONCEPT, LINE)
            assert report.in_failure_set
            assert report.substitutions == ORACLE_DIST[digits]
            assert report.budget_cap is None
        never = custom_failure(lambda ts_, h_: False)
        with pytest.raises(FailureSetEmptyError):
            attack_average(
                training_set_from_digits(LINE, CONCEPT, (0, 0, 0)),
                never, LEARNER, CONCEPT, LINE,
            )

    def test_adversary_wrappers(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        ts = training_set_from_digits(LINE, CONCEPT, (0, 1, 2))
        assert identity_adversary()(ts) == ts
        moved = budget_adversary(pred, LEARNER, CONCEPT, LINE, 3.0)(ts)
        assert pred(moved, LEARNER.train(moved))
        avg = average_adversary(pred, LEARNER, CONCEPT, LINE)(ts)
        assert pred(avg, LEARNER.train(avg))


class TestConfAndErr:
    def test_conf_identity_matches_oracle(self):
        got = conf_exact(LINE, CONCEPT, LEARNER, 0.25, M, "identity")
        assert got == pytest.approx(1.0 - len(ORACLE_FAILING) / 64.0, abs=1e-12)

    def test_conf_budget_is_mass_beyond_the_cap(self):
        for b in (0.0, 1.0, 2.0, 2.9):
            got = conf_exact(LINE, CONCEPT, LEARNER, 0.25, M, "budget", b=b)
            want = sum(1 for d in ORACLE_DIST.values() if d > math.floor(b)) / 64.0
            assert got == pytest.approx(want, abs=1e-12)

    def test_conf_average_is_zero_when_failures_exist(self):
        assert conf_exact(LINE, CONCEPT, LEARNER, 0.25, M, "average") == 0.0
        never = custom_failure(lambda ts, h: False)
        assert conf_exact(LINE, CONCEPT, LEARNER, 0.25, M, "average", pred=never) == 1.0
        assert conf_exact(LINE, CONCEPT, LEARNER, 0.25, M, "budget", b=2.0, pred=never) == 1.0

    def test_conf_parameter_validation(self):
        with pytest.raises(ValueError):
            conf_exact(LINE, CONCEPT, LEARNER, 0.25, M, "budget")  # b missing
        with pytest.raises(ValueError):
            conf_exact(LINE, CONCEPT, LEARNER, 0.25, M, "tickle")

    def test_err_matches_inline_enumeration(self):
        x = (1,)
        wrong = set()
        for digits in itertools.product(range(4), repeat=M):
            ts = training_set_from_digits(LINE, CONCEPT, digits)
            if LEARNER.train(ts)(x) != CONCEPT(x):
                wrong.add(digits)
        base = len(wrong) / 64.0
        assert err_exact(LINE, CONCEPT, LEARNER, x, M, "identity") == pytest.approx(
            base, abs=1e-12
        )
        assert err_exact(LINE, CONCEPT, LEARNER, x, M, "average") == (
            1.0 if wrong else 0.0
        )
        for b in (0.0, 1.0, 2.0):
            want = (
                sum(
                    1
                    for digits in itertools.product(range(4), repeat=M)
                    if min(sum(a != c for a, c in zip(digits, f)) for f in wrong)
                    <= math.floor(b)
                )
                / 64.0
            )
            got = err_exact(LINE, CONCEPT, LEARNER, x, M, "budget", b=b)
            assert got == pytest.approx(want, abs=1e-12)

    def test_estimates_are_deterministic_and_consistent(self):
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        adv = budget_adversary(pred, LEARNER, CONCEPT, LINE, 1.0)
        e1 = conf_estimate(LINE, CONCEPT, LEARNER, 0.25, M, adv, trials=400, seed=12)
        e2 = conf_estimate(LINE, CONCEPT, LEARNER, 0.25, M, adv, trials=400, seed=12)
        assert e1.value == e2.value and e1.rows == e2.rows
        assert e1.trials == 400 and len(e1.rows) == 400
        exact = conf_exact(LINE, CONCEPT, LEARNER, 0.25, M, "budget", b=1.0)
        assert abs(e1.value - exact) <= 2 * e1.halfwidth + 0.02
        for t, subs, bad in e1.rows[:10]:
            assert 0 <= subs <= 1  # budget 1 permits at most one substitution

    def test_err_estimate_matches_exact(self):
        x = (1,)
        est = err_estimate(
            LINE, CONCEPT, LEARNER, x, M, identity_adversary(), trials=500, seed=3
        )
        exact = err_exact(LINE, CONCEPT, LEARNER, x, M, "identity")
        assert abs(est.value - exact) <= 2 * est.halfwidth + 0.02
        with pytest.raises(ValueError):
            err_estimate(LINE, CONCEPT, LEARNER, x, M, identity_adversary(), trials=0)


class TestFormulas:
    def test_frozen_values_evaluated_by_hand(self):
        # sqrt(-ln(0.01) * 100) and sqrt(-ln(0.1) * 100 / 2)
        assert budget_formula(0.1, 0.1, 100) == pytest.approx(
            math.sqrt(math.log(100.0) * 100.0), abs=1e-12
        )
        assert avg_budget_formula(0.1, 100) == pytest.approx(
            math.sqrt(math.log(10.0) * 50.0), abs=1e-12
        )
        assert chosen_budget_formula(0.2, 0.1, 64) == pytest.approx(
            math.sqrt(-math.log(0.02) * 64.0), abs=1e-12
        )

    def test_validation(self):
        for bad in (0.0, 1.0, -0.3):
            with pytest.raises(ValueError):
                budget_formula(bad, 0.1, 10)
            with pytest.raises(ValueError):
                budget_formula(0.1, bad, 10)
            with pytest.raises(ValueError):
                avg_budget_formula(bad, 10)
            with pytest.raises(ValueError):
                chosen_budget_formula(bad, 0.1, 10)

    def test_variants_table(self):
        out = budget_formula_variants(0.1, 0.2, 9)
        assert out["budget"] == pytest.approx(budget_formula(0.1, 0.2, 9), abs=1e-15)
        assert out["avg_budget"] == pytest.approx(avg_budget_formula(0.1, 9), abs=1e-15)
        assert out["budget_m_outside_root"] == pytest.approx(
            math.sqrt(-math.log(0.02)) * 9, abs=1e-12
        )
        assert out["avg_budget_no_half"] == pytest.approx(
            math.sqrt(math.log(10.0) * 9), abs=1e-12
        )

    def test_formula_budget_drives_confidence_below_gamma(self):
        # acceptance-style sanity on the tiny fixture: at the formula
        # budget the attack always reaches the failure set
        pred = risk_exceeds(LINE, CONCEPT, 0.25)
        delta = baseline_failure_rate(LINE, CONCEPT, LEARNER, pred, M)
        gamma = 0.3
        b = budget_formula(delta, gamma, M)
        assert b >= max(ORACLE_DIST.values())  # generous on a tiny product
        conf = conf_exact(LINE, CONCEPT, LEARNER, 0.25, M, "budget", b=b)
        assert conf <= gamma + 1e-12


class TestMeanDistance:
    def test_exact_path_frozen_example(self):
        cube = build_hypercube(3)
        origin = ball(cube, (0, 0, 0), 0)
        report = mean_distance_check(cube, origin)
        assert report.exact
        assert report.epsilon == 0.125
        assert report.mean == pytest.approx(1.5, abs=1e-12)
        assert report.bound == pytest.approx(
            math.sqrt(math.log(8.0) * 3.0 / 2.0), abs=1e-12
        )
        assert report.holds

    def test_exact_path_over_random_sets(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            m = int(rng.integers(2, 7))
            space = build_hypercube(m, bias=float(rng.uniform(0.2, 0.8)))
            mask = rng.random(space.num_points()) < float(rng.uniform(0.05, 0.6))
            if not mask.any():
                continue
            report = mean_distance_check(space, EventSet.from_mask(space, mask))
            assert report.holds, report

    def test_monte_carlo_path(self):
        big = build_hypercube(50)
        s = EventSet.from_structure(big, HammingBall((0,) * 50, 20))
        r1 = mean_distance_check(big, s, samples=2000, seed=5)
        r2 = mean_distance_check(big, s, samples=2000, seed=5)
        assert not r1.exact
        assert (r1.mean, r1.stderr) == (r2.mean, r2.stderr)
        assert r1.holds
        true_mean = sum(
            math.comb(50, k) * max(0, k - 20) for k in range(51)
        ) / 2**50
        assert abs(r1.mean - true_mean) <= 4 * r1.stderr + 1e-9

    def test_error_paths(self):
        cube = build_hypercube(3)
        empty = EventSet.from_mask(cube, np.zeros(8, dtype=bool))
        with pytest.raises(FailureSetEmptyError):
            mean_distance_check(cube, empty)
        pts = build_explicit([(0,), (1,)], [0.5, 0.5])
        with pytest.raises(SpaceError):
            mean_distance_check(pts, EventSet.from_points(pts, [(0,)]))
        big = build_hypercube(50)
        loose = EventSet.from_predicate(big, lambda p: sum(p) < 25, materialize=False)
        with pytest.raises(SpaceError):
            mean_distance_check(big, loose, samples=100)
        s = EventSet.from_structure(big, HammingBall((0,) * 50, 20))
        with pytest.raises(ValueError):
            mean_distance_check(big, s)
