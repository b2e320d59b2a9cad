"""Self-verification suites: every closed form and certificate in the
package is replayed against exhaustive enumeration or an independent
numeric oracle on fixtures small enough to brute-force.

Each suite is deterministic given its seed (fixtures derive from
counter-based streams), so two runs with equal seeds produce identical
results — the reproducibility harness relies on that.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import poisoning as po
from .concentration import (
    LevyParams,
    exact_alpha_profile,
    hypercube_levy_params,
    levy_profile,
    mcdiarmid_check,
    scan_all_subsets,
    talagrand_profile,
)
from .evasion import (
    levy_attack_bounds,
    rob_greedy_oracle,
    rob_target,
    rob_upper_bound,
    risk_certificate,
)
from .learners import interval_learner, majority_learner, nn_learner
from .pc import label_masses, pc_certificates, pc_risk, pc_rob, target_label_risk, target_label_rob
from .rng import stream
from .spaces import (
    HAMMING,
    NORMALIZED_HAMMING,
    EventSet,
    HammingBall,
    ProductSpace,
    build_hypercube,
    build_product,
    set_distances,
)

__all__ = ["SuiteResult", "SUITE_NAMES", "run_suite", "run_all"]

_TOL = 1e-12
_MAX_FAILURES = 20


@dataclass(frozen=True)
class SuiteResult:
    """Outcome of one verification suite."""

    suite: str
    passed: bool
    checks: int
    failures: tuple
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": self.checks,
            "failures": list(self.failures),
            "stats": {k: self.stats[k] for k in sorted(self.stats)},
        }


class _Recorder:
    def __init__(self):
        self.checks = 0
        self.failures: list[str] = []
        self.stats: dict = {}

    def check(self, ok: bool, msg: str):
        self.checks += 1
        if not ok and len(self.failures) < _MAX_FAILURES:
            self.failures.append(msg)

    def result(self, suite: str) -> SuiteResult:
        return SuiteResult(suite, not self.failures, self.checks, tuple(self.failures), self.stats)


def _random_product(rng, max_n: int = 5, alphabet=(2, 3), biased: bool = True) -> ProductSpace:
    n = int(rng.integers(2, max_n + 1))
    dims = [int(rng.choice(alphabet)) for _ in range(n)]
    if biased and rng.random() < 0.5:
        weights = []
        for d in dims:
            p = rng.random(d) + 0.1
            weights.append(list(p / p.sum()))
        return ProductSpace(weights, metric=HAMMING)
    return build_product(dims)


def _random_mask(rng, n_pts: int) -> np.ndarray:
    while True:
        mask = rng.random(n_pts) < rng.uniform(0.1, 0.9)
        if mask.any():
            return mask


def _steps_to_mask(space: ProductSpace, mask: np.ndarray) -> np.ndarray:
    d = set_distances(space, EventSet.from_mask(space, mask))
    return np.rint(d / space.unit).astype(np.int64)


# ---------------------------------------------------------------------------
# expansion inequality for product measures
# ---------------------------------------------------------------------------

_SCAN_SHAPES = (
    [2], [3], [2, 2], [2, 3], [3, 3],
    [2, 2, 2], [2, 2, 3], [2, 3, 3], [2, 2, 2, 2], [2, 2, 2, 3],
)
_SAMPLED_SHAPES = ([3, 3, 3], [2, 2, 3, 3], [2, 3, 3, 3], [3, 3, 3, 3])


def _weighted_variants(shape, rng):
    yield build_product(shape)
    weights = []
    for d in shape:
        p = rng.random(d) + 0.1
        weights.append(list(p / p.sum()))
    yield ProductSpace(weights, metric=HAMMING)


def _suite_talagrand(seed: int) -> SuiteResult:
    rec = _Recorder()
    rng = stream(seed, 10)
    worst = -math.inf
    # full subset scans on every shape up to 24 points
    for shape in _SCAN_SHAPES:
        for space in _weighted_variants(shape, rng):
            n = space.n
            _, max_prod = scan_all_subsets(space)
            for r in range(1, max_prod.size):
                bound = math.exp(-(r * r) / n)
                worst = max(worst, float(max_prod[r]) - bound)
                rec.check(
                    float(max_prod[r]) <= bound + _TOL,
                    f"scan {shape} r={r}: {max_prod[r]!r} > exp(-r^2/n)={bound!r}",
                )
    # sampled + structured families on 27..81-point shapes
    subsets_checked = 0
    for si, shape in enumerate(_SAMPLED_SHAPES):
        for space in _weighted_variants(shape, rng):
            n = space.n
            n_pts = space.num_points()
            rows = space.digit_matrix()
            pair_steps = (rows[:, None, :] != rows[None, :, :]).sum(axis=2)
            w = space.point_weights()
            masks = []
            # structured: singleton balls at sampled centers, coordinate
            # juntas, and digit-sum lower sets
            centers = rng.choice(n_pts, size=6, replace=False)
            for c in centers:
                for r in range(n):
                    masks.append(pair_steps[int(c)] <= r)
            for k in (1, 2):
                for coords in itertools.combinations(range(n), k):
                    pattern = tuple(int(rng.integers(0, space.dims[c])) for c in coords)
                    masks.append(
                        np.all(rows[:, list(coords)] == np.asarray(pattern), axis=1)
                    )
            sums = rows.sum(axis=1)
            for t in range(int(sums.max()) + 1):
                masks.append(sums <= t)
            # random subsets: 5000 per shape, spread over both weightings
            for _ in range(2500):
                masks.append(_random_mask(rng, n_pts))
            for mask in masks:
                if not mask.any():
                    continue
                mu_s = float(w[mask].sum())
                d = pair_steps[:, mask].min(axis=1)
                for r in range(1, n + 1):
                    mu_exp = float(w[d <= r].sum())
                    bound = math.exp(-(r * r) / n)
                    prod = mu_s * (1.0 - mu_exp)
                    worst = max(worst, prod - bound)
                    rec.check(
                        prod <= bound + _TOL,
                        f"shape {shape} r={r}: mu(S)(1-mu(S_r))={prod!r} > {bound!r}",
                    )
                subsets_checked += 1
    rec.stats = {"scan_shapes": len(_SCAN_SHAPES), "sampled_subsets": subsets_checked,
                 "worst_slack": worst}
    return rec.result("talagrand")


# ---------------------------------------------------------------------------
# bounded-difference lower tail
# ---------------------------------------------------------------------------


def _suite_mcdiarmid(seed: int) -> SuiteResult:
    rec = _Recorder()
    rng = stream(seed, 11)
    for i in range(200):
        n = int(rng.integers(2, 9))
        if n <= 5:
            dims = [int(rng.choice((2, 3))) for _ in range(n)]
        else:
            dims = [2] * n
        metric = HAMMING if i % 2 == 0 else NORMALIZED_HAMMING
        if rng.random() < 0.5:
            weights = []
            for d in dims:
                p = rng.random(d) + 0.1
                weights.append(list(p / p.sum()))
            space = ProductSpace(weights, metric=metric)
        else:
            space = build_product(dims, metric=metric)
        mask = _random_mask(rng, space.num_points())
        s = EventSet.from_mask(space, mask)
        b = float(rng.uniform(0.0, n)) * space.unit
        rep = mcdiarmid_check(space, s, b)
        rec.check(rep.exact, f"fixture {i}: expected the exact path")
        rec.check(
            rep.holds and rep.tail <= rep.bound + _TOL,
            f"fixture {i} (n={n}, b={b!r}): tail {rep.tail!r} > bound {rep.bound!r}",
        )
    rec.stats = {"fixtures": 200}
    return rec.result("mcdiarmid")


# ---------------------------------------------------------------------------
# partial-robustness identity
# ---------------------------------------------------------------------------


def _suite_rob_identity(seed: int) -> SuiteResult:
    rec = _Recorder()
    rng = stream(seed, 12)
    triples = 0
    for i in range(1500):
        space = _random_product(rng, max_n=5)
        n_pts = space.num_points()
        mask = _random_mask(rng, n_pts)
        target = EventSet.from_mask(space, mask)
        w = space.point_weights()
        d = set_distances(space, target)
        rhos = [float(rng.uniform(1e-6, 1.0)), float(rng.uniform(1e-6, 1.0)), 1.0]
        for rho in rhos:
            rep = rob_target(space, target, rho)
            greedy = rob_greedy_oracle(space, target, rho)
            rec.check(
                abs(rep.value - greedy) <= 1e-9,
                f"triple {i} rho={rho!r}: shell formula {rep.value!r} != greedy {greedy!r}",
            )
            rec.check(
                rep.rho >= rho - 1e-12,
                f"triple {i}: achieved rho {rep.rho!r} below requested {rho!r}",
            )
            triples += 1
        full = rob_target(space, target, 1.0)
        expectation = float(np.dot(w, d))
        rec.check(
            abs(full.value - expectation) <= 1e-12,
            f"triple {i}: full robustness {full.value!r} != E[d] {expectation!r}",
        )
    rec.stats = {"triples": triples, "spaces": 1500}
    return rec.result("rob-identity")


# ---------------------------------------------------------------------------
# risk certificates, exhaustively on the 3- and 4-dimensional hypercubes
# ---------------------------------------------------------------------------


def _cube_tables(n: int):
    n_pts = 1 << n
    nbr = [0] * n_pts
    for x in range(n_pts):
        m = 1 << x
        for j in range(n):
            m |= 1 << (x ^ (1 << j))
        nbr[x] = m
    full = (1 << n_pts) - 1
    expand1 = [0] * (full + 1)
    for s in range(1, full + 1):
        low = s & (-s)
        expand1[s] = expand1[s & (s - 1)] | nbr[low.bit_length() - 1]
    return n_pts, expand1


def _suite_risk_cert(seed: int) -> SuiteResult:
    rec = _Recorder()
    certified_half = 0
    certified_gamma = 0
    for n in (3, 4):
        n_pts, expand1 = _cube_tables(n)
        alpha_hat = [min(1.0, 2.0 * math.exp(-(b * b) / n)) for b in range(0, 2 * n + 1)]
        gammas = (0.5, 0.25, 0.125)
        active_b2 = {g: [b2 for b2 in range(1, n + 1) if g >= alpha_hat[b2]] for g in gammas}
        half_count = n_pts // 2
        for s in range(1, 1 << n_pts):
            eps_num = s.bit_count()  # mass numerator over n_pts
            reach = [s]
            for _ in range(2 * n):
                reach.append(expand1[reach[-1]] if reach[-1] != (1 << n_pts) - 1 else reach[-1])
            counts = [r.bit_count() for r in reach]
            for b1 in range(1, n + 1):
                if eps_num / n_pts > alpha_hat[b1]:
                    certified_half += 1
                    rec.check(
                        counts[b1] * 2 > n_pts,
                        f"n={n} E={s:#x} b1={b1}: mass {counts[b1]}/{n_pts} not above 1/2",
                    )
                    for g in gammas:
                        need = math.ceil((1.0 - g) * n_pts)
                        for b2 in active_b2[g]:
                            certified_gamma += 1
                            r = min(b1 + b2, 2 * n)
                            rec.check(
                                counts[r] >= need,
                                f"n={n} E={s:#x} b1={b1} b2={b2} gamma={g}:"
                                f" mass {counts[r]}/{n_pts} below 1-gamma",
                            )
    # the certificate helper must agree with the raw comparisons
    cube = build_hypercube(3)
    profile = talagrand_profile(cube)
    _, expand1 = _cube_tables(3)
    for s in range(1, (1 << 8) - 1):
        eps = s.bit_count() / 8.0
        reach = [s]
        for _ in range(6):
            reach.append(expand1[reach[-1]] if reach[-1] != 255 else reach[-1])
        for b1, b2, g in ((1, 2, 0.5), (2, 3, 0.25), (3, 3, 0.125)):
            flags = risk_certificate(profile, eps, float(b1), float(b2), g)
            if flags.risk_ge_half:
                rec.check(
                    reach[b1].bit_count() > 4,
                    f"helper: E={s:#x} b1={b1} certified half but mass fails",
                )
            if flags.risk_ge_one_minus_gamma:
                r = min(b1 + b2, 6)
                rec.check(
                    reach[r].bit_count() >= math.ceil((1 - g) * 8),
                    f"helper: E={s:#x} b1={b1} b2={b2} certified 1-gamma but mass fails",
                )
    rec.stats = {"certified_half": certified_half, "certified_gamma": certified_gamma}
    return rec.result("risk-cert")


# ---------------------------------------------------------------------------
# robustness upper bound dominance
# ---------------------------------------------------------------------------


def _suite_rob_bound(seed: int) -> SuiteResult:
    rec = _Recorder()
    rng = stream(seed, 14)
    instances = 0
    draws = 0
    while instances < 1000 and draws < 20000:
        draws += 1
        n = int(rng.integers(2, 9))
        space = build_hypercube(n) if rng.random() < 0.7 else build_hypercube(
            n, bias=float(rng.uniform(0.25, 0.75))
        )
        mask = rng.random(space.num_points()) < rng.uniform(0.4, 0.95)
        if not mask.any() or mask.all():
            continue
        target = EventSet.from_mask(space, mask)
        eps = float(space.point_weights()[mask].sum())
        profile = talagrand_profile(space)
        rho = float(rng.uniform(0.5, 0.999))
        b1 = next((k for k in range(1, n + 1) if eps > profile(float(k))), None)
        b2 = next((k for k in range(1, n + 1) if profile(float(k)) <= 1.0 - rho), None)
        if b1 is None or b2 is None:
            continue
        bound = rob_upper_bound(profile, eps, rho, float(b1), float(b2))
        true_val = rob_target(space, target, rho).value
        rec.check(
            true_val <= bound + 1e-9,
            f"n={n} eps={eps!r} rho={rho!r}: Rob {true_val!r} > bound {bound!r}",
        )
        instances += 1
    rec.check(instances >= 1000, f"only {instances} dominance instances produced")
    rec.stats = {"instances": instances, "draws": draws}
    return rec.result("rob-bound")


# ---------------------------------------------------------------------------
# normal-family closed forms
# ---------------------------------------------------------------------------


def _suite_levy(seed: int) -> SuiteResult:
    rec = _Recorder()
    rng = stream(seed, 15)
    # frozen spot checks on the 100-coordinate hypercube family
    params = hypercube_levy_params(100)
    bounds = levy_attack_bounds(params, epsilon=0.1, gamma=0.1, rho=0.9)
    ref = math.sqrt(math.log(20.0)) / 10.0
    rec.check(
        abs(bounds.b_half - ref) <= 1e-12,
        f"b_half {bounds.b_half!r} != sqrt(ln 20)/10 {ref!r}",
    )
    rec.check(
        abs(bounds.b_half - 0.17308183826022855) <= 1e-12,
        f"b_half {bounds.b_half!r} drifted from frozen value",
    )
    rec.check(
        abs(bounds.b_to_one_minus_gamma - 2 * ref) <= 1e-12,
        "equal-epsilon-gamma sum form should be twice b_half",
    )
    # closed forms against the profile and a blunt trapezoid quadrature
    for i in range(200):
        k1 = float(rng.uniform(1.0, 4.0))
        k2 = float(rng.uniform(0.25, 4.0))
        n = int(rng.integers(4, 400))
        eps = float(rng.uniform(1e-3, min(1.0, k1) * 0.999))
        gam = float(rng.uniform(1e-3, min(1.0, k1) * 0.999))
        rho = float(rng.uniform(0.5, 0.999))
        p = LevyParams(k1, k2, n)
        prof = levy_profile(p)
        res = levy_attack_bounds(p, eps, gam, rho)
        rec.check(
            abs(prof(res.b_half) - min(eps, 1.0)) <= 1e-9,
            f"draw {i}: profile at b_half is {prof(res.b_half)!r}, wanted {eps!r}",
        )
        tail = res.b_to_one_minus_gamma - res.b_half
        rec.check(
            abs(prof(res.b_half + tail) - min(gam, 1.0)) <= 1e-9
            or prof(res.b_to_one_minus_gamma) <= gam + 1e-9,
            f"draw {i}: profile at the 1-gamma budget exceeds gamma",
        )
        b2 = math.sqrt(math.log(k1 / (1.0 - rho))) / math.sqrt(k2 * n)
        grid = np.linspace(0.0, b2, 4001)
        capped = float(np.trapezoid(np.minimum(1.0, k1 * np.exp(-k2 * n * grid * grid)), grid))
        uncapped = float(np.trapezoid(k1 * np.exp(-k2 * n * grid * grid), grid))
        direct = (1.0 - eps) * res.b_half + uncapped
        rec.check(
            abs(res.rob_upper - direct) <= 5e-6 + 1e-6 * abs(direct),
            f"draw {i}: closed form {res.rob_upper!r} != quadrature {direct!r}",
        )
        tight = (1.0 - eps) * res.b_half + prof.integral(b2)
        rec.check(
            res.rob_upper >= tight - 1e-9,
            f"draw {i}: closed form {res.rob_upper!r} below the capped bound {tight!r}",
        )
        rec.check(
            abs(prof.integral(b2) - capped) <= 5e-6,
            f"draw {i}: profile integral {prof.integral(b2)!r} != quadrature {capped!r}",
        )
    # the hypercube profile dominates exact concentration (n <= 4 full scan)
    for n in (2, 3, 4):
        for metric, prof in (
            (HAMMING, talagrand_profile(build_hypercube(n))),
            (NORMALIZED_HAMMING, levy_profile(hypercube_levy_params(n))),
        ):
            space = build_hypercube(n, metric=metric)
            exact = exact_alpha_profile(space)
            for k in range(0, n + 1):
                b = k * space.unit
                rec.check(
                    exact(b) <= prof(b) + _TOL,
                    f"n={n} {metric} k={k}: exact alpha {exact(b)!r} above profile {prof(b)!r}",
                )
    rec.stats = {"draws": 200, "frozen_b_half": bounds.b_half}
    return rec.result("levy")


# ---------------------------------------------------------------------------
# prediction-change certificates vs enumeration
# ---------------------------------------------------------------------------

_PC_SHAPES = ([2, 2], [2, 3], [2, 2, 2], [2, 2, 3], [2, 3, 3], [2, 2, 2, 2])


def _suite_pc_bounds(seed: int) -> SuiteResult:
    rec = _Recorder()
    rng = stream(seed, 16)
    gammas = (0.05, 0.2, 0.5, 0.8)
    instances = 0
    applied = 0
    while instances < 500:
        shape = _PC_SHAPES[instances % len(_PC_SHAPES)]
        space = next(
            itertools.islice(_weighted_variants(shape, rng), int(rng.integers(0, 2)), None)
        )
        n = space.n
        n_pts = space.num_points()
        n_labels = int(rng.integers(2, 4))
        assignment = [int(rng.integers(0, n_labels)) for _ in range(n_pts)]
        if len(set(assignment)) < 2:
            continue
        labels = tuple(range(n_labels))
        h = lambda p, _a=assignment, _s=space: _a[_s.index_of(p)]
        profile = exact_alpha_profile(space)
        masses = label_masses(space, h, labels)
        pcr = [pc_risk(space, h, labels, float(b)) for b in range(n + 1)]
        pcrob = pc_rob(space, h, labels)
        tlr = {l: [target_label_risk(space, h, labels, l, float(b)) for b in range(n + 1)]
               for l in labels}
        tlrob = {l: target_label_rob(space, h, labels, l)
                 for l in labels if masses[l] > 0.0}
        b_meas = next((b for b in range(n + 1) if pcr[b] >= 0.5), None)
        for b1 in range(0, n + 1):
            for b2 in range(0, n + 1):
                for g in gammas:
                    target = labels[int(rng.integers(0, n_labels))]
                    certs = pc_certificates(
                        profile, masses, float(b1), float(b2), g,
                        target_label=target,
                        b=None if b_meas is None else float(b_meas),
                        pc_risk_at_b=None if b_meas is None else pcr[b_meas],
                    )
                    if certs.change_risk.applies:
                        applied += 1
                        r = min(b1 + b2, n)
                        rec.check(
                            pcr[r] >= 1.0 - g - _TOL,
                            f"{shape} b1={b1} b2={b2} g={g}: change risk {pcr[r]!r}"
                            f" below certified {1 - g!r}",
                        )
                    if certs.target_risk.applies:
                        applied += 1
                        r = min(b1 + b2, n)
                        rec.check(
                            tlr[target][r] >= 1.0 - g - _TOL,
                            f"{shape} b1={b1} b2={b2} g={g} l={target}:"
                            f" target risk {tlr[target][r]!r} below {1 - g!r}",
                        )
                    if certs.change_rob.applies:
                        applied += 1
                        rec.check(
                            pcrob <= certs.change_rob.value + _TOL,
                            f"{shape}: change rob {pcrob!r} above {certs.change_rob.value!r}",
                        )
                    if certs.target_rob.applies and masses[target] > 0.0:
                        applied += 1
                        rec.check(
                            tlrob[target] <= certs.target_rob.value + _TOL,
                            f"{shape} l={target}: target rob {tlrob[target]!r}"
                            f" above {certs.target_rob.value!r}",
                        )
        instances += 1
    rec.check(applied >= 500, f"only {applied} certificates fired across the run")
    rec.stats = {"instances": instances, "applied": applied}
    return rec.result("pc-bounds")


# ---------------------------------------------------------------------------
# poisoning: confidence, chosen-instance error, mean distance
# ---------------------------------------------------------------------------


def _interval_fixtures(max_points: int = 4, max_m: int = 6):
    for n_pts in range(2, max_points + 1):
        space = build_product([n_pts])
        for thr in range(n_pts - 1):
            concept = (lambda t: (lambda p: int(p[0] > t + 0.5)))(thr)
            for m in range(2, max_m + 1):
                if n_pts ** m > 1 << 14:
                    continue
                yield space, concept, m


def _suite_poison_conf(seed: int) -> SuiteResult:
    rec = _Recorder()
    learner = interval_learner()
    fixtures = 0
    for space, concept, m in _interval_fixtures(max_points=4, max_m=6):
        for eps in (0.2, 0.3):
            pred = po.risk_exceeds(space, concept, eps)
            delta = po.baseline_failure_rate(space, concept, learner, pred, m)
            if not 0.0 < delta < 1.0:
                continue
            fixtures += 1
            rec.check(
                po.conf_exact(space, concept, learner, eps, m, "identity", pred=pred)
                == 1.0 - delta,
                f"m={m} eps={eps}: identity confidence disagrees with the baseline",
            )
            rec.check(
                po.conf_exact(space, concept, learner, eps, m, "average", pred=pred) == 0.0,
                f"m={m} eps={eps}: the unbudgeted attack left confidence above 0",
            )
            for gamma in (0.1, 0.3, 0.5):
                if delta * gamma >= 1.0:
                    continue
                b = po.budget_formula(delta, gamma, m)
                for budget in (b, float(math.ceil(b))):
                    conf = po.conf_exact(
                        space, concept, learner, eps, m, "budget", b=budget, pred=pred
                    )
                    rec.check(
                        conf <= gamma + _TOL,
                        f"m={m} eps={eps} gamma={gamma}: confidence {conf!r} above gamma"
                        f" at budget {budget!r}",
                    )
            mean = po.mean_failure_distance(space, concept, learner, pred, m)
            bound = po.avg_budget_formula(delta, m)
            rec.check(
                mean <= bound + _TOL,
                f"m={m} eps={eps}: mean distance {mean!r} above {bound!r}",
            )
    rec.stats = {"fixtures": fixtures}
    return rec.result("poison-conf")


def _suite_poison_err(seed: int) -> SuiteResult:
    rec = _Recorder()
    fixtures = 0
    for learner in (interval_learner(), nn_learner(), majority_learner()):
        for space, concept, m in _interval_fixtures(max_points=4, max_m=4):
            if learner.name == "majority" and space.num_points() > 2:
                continue
            for x in space.iter_points():
                eps = po.err_exact(space, concept, learner, x, m, "identity")
                reachable = eps > 0.0
                avg = po.err_exact(space, concept, learner, x, m, "average")
                rec.check(
                    avg == (1.0 if reachable else 0.0),
                    f"{learner.name} m={m} x={x}: unbudgeted error {avg!r}",
                )
                if not 0.0 < eps < 1.0:
                    continue
                fixtures += 1
                for gamma in (0.1, 0.3, 0.5):
                    b = po.chosen_budget_formula(eps, gamma, m)
                    err = po.err_exact(space, concept, learner, x, m, "budget", b=b)
                    rec.check(
                        err >= 1.0 - gamma - _TOL,
                        f"{learner.name} m={m} x={x} gamma={gamma}:"
                        f" error {err!r} below {1 - gamma!r} at budget {b!r}",
                    )
    rec.stats = {"fixtures": fixtures}
    return rec.result("poison-err")


def _suite_poison_dist(seed: int) -> SuiteResult:
    rec = _Recorder()
    rng = stream(seed, 19)
    # exact: random sets on small products, plus learner failure sets
    for i in range(60):
        space = _random_product(rng, max_n=4)
        mask = _random_mask(rng, space.num_points())
        rep = po.mean_distance_check(space, EventSet.from_mask(space, mask))
        rec.check(rep.exact, f"set {i}: expected the exact path")
        rec.check(
            rep.holds and rep.mean <= rep.bound + _TOL,
            f"set {i}: mean {rep.mean!r} above bound {rep.bound!r}",
        )
    learner = interval_learner()
    for space, concept, m in _interval_fixtures(max_points=4, max_m=4):
        pred = po.risk_exceeds(space, concept, 0.2)
        tspace, mask = po.failure_mask(space, concept, learner, pred, m)
        if not mask.any():
            continue
        rep = po.mean_distance_check(tspace, EventSet.from_mask(tspace, mask))
        rec.check(
            rep.holds,
            f"failure set m={m}: mean {rep.mean!r} above bound {rep.bound!r}",
        )
    # Monte Carlo on a 50-fold product, 3-standard-error margin
    big = build_hypercube(50)
    for radius in (20, 25):
        s = EventSet.from_structure(big, HammingBall((0,) * 50, radius))
        rep = po.mean_distance_check(big, s, samples=4000, seed=seed)
        rec.check(not rep.exact, f"radius {radius}: expected the sampled path")
        rec.check(
            rep.holds,
            f"radius {radius}: mean {rep.mean!r} above bound {rep.bound!r}"
            f" (+3 x {rep.stderr!r})",
        )
    rec.stats = {"random_sets": 60}
    return rec.result("poison-dist")


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

_SUITES = {
    "talagrand": _suite_talagrand,
    "mcdiarmid": _suite_mcdiarmid,
    "rob-identity": _suite_rob_identity,
    "risk-cert": _suite_risk_cert,
    "rob-bound": _suite_rob_bound,
    "levy": _suite_levy,
    "pc-bounds": _suite_pc_bounds,
    "poison-conf": _suite_poison_conf,
    "poison-err": _suite_poison_err,
    "poison-dist": _suite_poison_dist,
}

SUITE_NAMES = tuple(_SUITES)


def run_suite(name: str, seed: int = 0) -> SuiteResult:
    if name not in _SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    return _SUITES[name](seed)


def run_all(seed: int = 0, suites=None) -> list[SuiteResult]:
    names = SUITE_NAMES if suites is None else tuple(suites)
    return [run_suite(name, seed) for name in names]
