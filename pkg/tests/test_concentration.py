"""Concentration profiles: exact scan, certified bounds, witness bounds,
and the bounded-difference tail check."""

import itertools
import math

import numpy as np
import pytest

from cal.errors import (
    DistanceCapExceededError,
    NoValidCandidateError,
    SpaceError,
    SpaceTooLargeError,
)
from cal.concentration import (
    EXACT_SCAN_MAX_POINTS,
    ConcentrationProfile,
    LevyParams,
    candidate_family,
    empirical_alpha,
    empirical_profile,
    exact_alpha,
    exact_alpha_profile,
    hypercube_levy_params,
    levy_profile,
    mcdiarmid_check,
    profile_rows,
    scan_all_subsets,
    talagrand_profile,
)
from cal.spaces import (
    HAMMING,
    NORMALIZED_HAMMING,
    EventSet,
    HammingBall,
    ball,
    build_explicit,
    build_gaussian,
    build_hypercube,
    build_product,
    build_sym_group,
)

# ---------------------------------------------------------------------------
# independent oracle: alpha(b) over every subset, pure itertools
# ---------------------------------------------------------------------------


def alpha_oracle(space, b: float) -> float:
    """1 - inf{mu(S_b) : mu(S) >= 1/2}, scanning every nonempty subset with
    plain python sets and pairwise distances."""
    pts = list(space.iter_points())
    w = {p: float(v) for p, v in zip(pts, space.point_weights())}
    worst = 1.0
    for r in range(1, len(pts) + 1):
        for sub in itertools.combinations(pts, r):
            if sum(w[p] for p in sub) < 0.5 - 1e-12:
                continue
            grown = sum(
                w[q] for q in pts if min(space.distance(q, p) for p in sub) <= b + 1e-12
            )
            worst = min(worst, grown)
    return 1.0 - worst


# frozen oracle self-checks, worked by hand before anything below ran:
# 2-cube:  (0.5, 0.0, 0.0)  3-cube:  (0.5, 0.125, 0.0, 0.0)
def test_oracle_matches_hand_computed_cubes():
    cube2 = build_product([2, 2])
    assert [alpha_oracle(cube2, b) for b in range(3)] == [0.5, 0.0, 0.0]
    cube3 = build_product([2, 2, 2])
    assert [alpha_oracle(cube3, b) for b in range(4)] == [0.5, 0.125, 0.0, 0.0]


SMALL_SPACES = [
    build_product([2, 2]),
    build_product([2, 2, 2]),
    build_product([4]),
    build_product([2, 3]),
    build_product([2, 2], weights=[[0.3, 0.7], [0.25, 0.75]]),
    build_hypercube(3, bias=0.2),
    build_sym_group(3),
    build_explicit([(0,), (1,), (3,), (6,)], [0.1, 0.2, 0.3, 0.4]),
]


@pytest.mark.parametrize("space", SMALL_SPACES, ids=lambda s: f"{s.kind}-{s.num_points()}")
def test_exact_profile_matches_oracle(space):
    prof = exact_alpha_profile(space)
    diam_steps = int(round(space.diameter() / space.unit))
    for r in range(diam_steps + 1):
        b = r * space.unit
        assert prof(b) == pytest.approx(alpha_oracle(space, b), abs=1e-12)
    assert prof(space.diameter() + space.unit) == 0.0


def test_exact_alpha_frozen_values(cube3):
    assert exact_alpha(cube3, 0.0) == 0.5
    assert exact_alpha(cube3, 1.0) == 0.125
    assert exact_alpha(cube3, 2.0) == 0.0


def test_exact_profile_rejects_large_spaces():
    too_big = build_hypercube(5)  # 32 points > cap
    assert too_big.num_points() > EXACT_SCAN_MAX_POINTS
    with pytest.raises(SpaceTooLargeError):
        exact_alpha_profile(too_big)


def test_scan_subset_products_cover_expansion_pairs(cube3):
    # max over S of mu(S)(1 - mu(S_r)) at r = 1 is attained by the
    # half-mass ball: 0.5 * (1 - 0.875) = 0.0625
    _, max_prod = scan_all_subsets(cube3)
    assert max_prod[1] == pytest.approx(0.0625, abs=1e-15)


# ---------------------------------------------------------------------------
# profile object semantics
# ---------------------------------------------------------------------------


class TestProfileObject:
    def test_step_profile_lookup_and_integral(self):
        prof = ConcentrationProfile(
            provenance="exact",
            scale=HAMMING,
            sense="exact",
            b_max=2.0,
            steps=[0.5, 0.125, 0.0],
            unit=1.0,
        )
        assert prof(0.0) == 0.5
        assert prof(0.99) == 0.5
        assert prof(1.0) == 0.125
        assert prof(7.0) == 0.0
        assert prof.integral(2.0) == pytest.approx(0.625, abs=1e-15)
        assert prof.integral(1.5, lo=0.5) == pytest.approx(0.5 * 0.5 + 0.125 * 0.5, abs=1e-15)
        assert prof.tail_integral(0.0) == pytest.approx(0.625, abs=1e-15)

    def test_gauss_profile_integral_matches_quadrature(self):
        prof = ConcentrationProfile(
            provenance="levy", scale=NORMALIZED_HAMMING, sense="upper",
            b_max=math.inf, k1=2.0, c=9.0,
        )
        for lo, hi in [(0.0, 1.0), (0.2, 0.7), (0.0, 5.0)]:
            xs = np.linspace(lo, hi, 200_001)
            ys = np.minimum(1.0, 2.0 * np.exp(-9.0 * xs * xs))
            assert prof.integral(hi, lo=lo) == pytest.approx(
                float(np.trapezoid(ys, xs)), abs=1e-8
            )
        tail_grid = np.linspace(1.5, 12.0, 400_001)
        tail = float(np.trapezoid(2.0 * np.exp(-9.0 * tail_grid**2), tail_grid))
        assert prof.tail_integral(1.5) == pytest.approx(tail, abs=1e-10)

    def test_profiles_are_non_increasing(self, cube3):
        for prof in (exact_alpha_profile(cube3), talagrand_profile(cube3)):
            values = [prof(b / 4) for b in range(0, 16)]
            assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_rejects_negative_radius_and_bad_shape(self):
        prof = ConcentrationProfile(
            provenance="levy", scale=HAMMING, sense="upper", b_max=math.inf, k1=1.0, c=1.0
        )
        with pytest.raises(ValueError):
            prof(-0.5)
        with pytest.raises(ValueError):
            prof.integral(1.0, lo=2.0)
        with pytest.raises(ValueError):
            ConcentrationProfile(provenance="x", scale=HAMMING, sense="upper", b_max=1.0)

    def test_profile_rows_helper(self, cube3):
        rows = profile_rows(exact_alpha_profile(cube3), [0.0, 1.0])
        assert rows == [(0.0, 0.5, "exact"), (1.0, 0.125, "exact")]

    def test_certifiable_flag(self, cube3):
        assert exact_alpha_profile(cube3).certifiable
        assert talagrand_profile(cube3).certifiable
        assert not empirical_profile(cube3).certifiable


# ---------------------------------------------------------------------------
# certified upper bounds
# ---------------------------------------------------------------------------


class TestCertifiedBounds:
    def test_product_bound_closed_form(self):
        space = build_hypercube(9)
        prof = talagrand_profile(space)
        assert prof(0.0) == 1.0
        assert prof(3.0) == pytest.approx(min(1.0, 2.0 * math.exp(-1.0)), abs=1e-15)
        assert prof.scale == HAMMING and prof.sense == "upper"

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_product_bound_dominates_exact_alpha(self, n):
        space = build_hypercube(n)
        prof = talagrand_profile(space)
        exact = exact_alpha_profile(space)  # oracle-validated above for n <= 3
        for r in range(n + 1):
            assert prof(float(r)) >= exact(float(r)) - 1e-12

    def test_product_bound_requires_hamming_product(self):
        with pytest.raises(SpaceError):
            talagrand_profile(build_hypercube(3, metric=NORMALIZED_HAMMING))
        with pytest.raises(SpaceError):
            talagrand_profile(build_explicit([(0,), (1,)], [0.5, 0.5]))

    def test_levy_params_validation(self):
        with pytest.raises(ValueError):
            LevyParams(0.0, 1.0, 10)
        with pytest.raises(ValueError):
            LevyParams(2.0, -1.0, 10)
        with pytest.raises(ValueError):
            LevyParams(2.0, 1.0, 0)
        assert hypercube_levy_params(25) == LevyParams(2.0, 1.0, 25)

    def test_levy_profile_values(self):
        prof = levy_profile(LevyParams(2.0, 1.0, 100))
        assert prof(0.0) == 1.0
        assert prof(0.3) == pytest.approx(2.0 * math.exp(-9.0), abs=1e-15)
        assert prof.scale == NORMALIZED_HAMMING

    def test_levy_matches_normalized_product_bound(self):
        # on the normalized scale b = r/n the product inequality reads
        # 2 exp(-(r/n)^2 * n) once, so the two parameterizations agree
        n = 16
        hamming = talagrand_profile(build_hypercube(n))
        normalized = levy_profile(hypercube_levy_params(n))
        for r in range(n + 1):
            assert normalized(r / n) == pytest.approx(hamming(float(r)), abs=1e-14)


# ---------------------------------------------------------------------------
# witness (lower) bounds
# ---------------------------------------------------------------------------


class TestEmpirical:
    def test_lower_bound_never_exceeds_exact(self):
        for space in SMALL_SPACES:
            prof = exact_alpha_profile(space)
            diam_steps = int(round(space.diameter() / space.unit))
            for r in range(diam_steps + 1):
                b = r * space.unit
                emp = empirical_alpha(space, b=b)
                assert emp <= prof(b) + 1e-12

    def test_balls_family_is_tight_on_uniform_cube(self, cube3):
        # the half-mass ball is the extremal set here, so witnesses match
        assert empirical_alpha(cube3, b=1.0) == pytest.approx(0.125, abs=1e-12)

    def test_profile_is_non_increasing_and_lower_sense(self, cube4):
        prof = empirical_profile(cube4)
        assert prof.sense == "lower"
        values = [prof(float(r)) for r in range(5)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
        exact = exact_alpha_profile(cube4)
        for r in range(5):
            assert values[r] <= exact(float(r)) + 1e-12

    def test_candidate_families_are_deterministic(self, cube4):
        a = candidate_family(cube4, "auto", seed=3)
        b = candidate_family(cube4, "auto", seed=3)
        assert len(a) == len(b) > 0
        for s, t in zip(a, b):
            assert np.array_equal(s.ensure_mask(), t.ensure_mask())

    def test_unknown_family_and_negative_radius(self, cube3):
        with pytest.raises(ValueError):
            candidate_family(cube3, "polytopes")
        with pytest.raises(ValueError):
            empirical_alpha(cube3, b=-1.0)

    def test_monte_carlo_path_on_big_space(self):
        big = build_hypercube(40)
        value = empirical_alpha(big, family="balls", b=3.0, samples=2000, seed=5)
        # true tail above radius 20 + 3: Pr[Bin(40,1/2) > 23]
        true = sum(math.comb(40, k) for k in range(24, 41)) / 2**40
        assert abs(value - true) < 0.05
        again = empirical_alpha(big, family="balls", b=3.0, samples=2000, seed=5)
        assert value == again


# ---------------------------------------------------------------------------
# bounded-difference tail check
# ---------------------------------------------------------------------------


class TestMcdiarmid:
    def test_exact_report_against_inline_enumeration(self, cube4):
        s = ball(cube4, (0, 0, 0, 0), 1)
        report = mcdiarmid_check(cube4, s, b=1.0)
        # inline oracle: distances of all 16 points to the radius-1 ball
        pts = list(cube4.iter_points())
        members = [p for p in pts if sum(p) <= 1]
        d = [min(sum(a != b_ for a, b_ in zip(p, q)) for q in members) for p in pts]
        mean = sum(d) / 16.0
        tail = sum(1 for v in d if v <= mean - 1.0 + 1e-12) / 16.0
        assert report.exact
        assert report.mean == pytest.approx(mean, abs=1e-12)
        assert report.tail == pytest.approx(tail, abs=1e-12)
        assert report.bound == pytest.approx(math.exp(-2.0 / 4.0), abs=1e-15)
        assert report.holds == (tail <= report.bound + 1e-12)

    def test_bound_holds_across_random_exact_fixtures(self):
        rng = np.random.default_rng(11)
        for trial in range(40):
            n = int(rng.integers(2, 7))
            space = build_hypercube(n, bias=float(rng.uniform(0.2, 0.8)))
            mask = rng.random(space.num_points()) < 0.4
            if not mask.any():
                continue
            s = EventSet.from_mask(space, mask)
            b = float(rng.uniform(0.0, n))
            report = mcdiarmid_check(space, s, b=b)
            assert report.holds, (n, b, report)

    def test_normalized_metric_rescales_exponent(self):
        plain = build_hypercube(4)
        norm = build_hypercube(4, metric=NORMALIZED_HAMMING)
        r_plain = mcdiarmid_check(plain, ball(plain, (0,) * 4, 0), b=2.0)
        r_norm = mcdiarmid_check(norm, ball(norm, (0,) * 4, 0), b=0.5)
        assert r_plain.bound == pytest.approx(r_norm.bound, abs=1e-15)
        assert r_plain.tail == pytest.approx(r_norm.tail, abs=1e-15)

    def test_monte_carlo_path_is_seeded_and_holds(self):
        big = build_hypercube(60)
        s = EventSet.from_structure(big, HammingBall((0,) * 60, 10))
        r1 = mcdiarmid_check(big, s, b=6.0, samples=3000, seed=7)
        r2 = mcdiarmid_check(big, s, b=6.0, samples=3000, seed=7)
        assert not r1.exact
        assert (r1.mean, r1.tail, r1.stderr) == (r2.mean, r2.tail, r2.stderr)
        assert r1.holds
        # E d(x, ball) = E max(0, |x| - 10) with |x| ~ Bin(60, 1/2)
        true_mean = sum(
            math.comb(60, k) * max(0, k - 10) for k in range(61)
        ) / 2**60
        assert abs(r1.mean - true_mean) < 0.3

    def test_error_paths(self, cube3):
        empty = EventSet.from_mask(cube3, np.zeros(8, dtype=bool))
        with pytest.raises(SpaceError):
            mcdiarmid_check(cube3, empty, b=1.0)
        with pytest.raises(ValueError):
            mcdiarmid_check(cube3, ball(cube3, (0, 0, 0), 1), b=-1.0)
        with pytest.raises(SpaceError):
            g = build_gaussian(4)
            mcdiarmid_check(g, EventSet.from_predicate(g, lambda p: p[0] > 0, materialize=False), b=1.0)
        big = build_hypercube(40)
        pred_only = EventSet.from_predicate(big, lambda p: sum(p) < 5, materialize=False)
        with pytest.raises(DistanceCapExceededError):
            mcdiarmid_check(big, pred_only, b=1.0, samples=100)
        structural = EventSet.from_structure(big, HammingBall((0,) * 40, 4))
        with pytest.raises(ValueError):
            mcdiarmid_check(big, structural, b=1.0)  # samples required
