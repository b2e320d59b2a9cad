"""Experiment harness: JSON-configured runs with seeded reproducibility.

A run is described by one JSON document (validated against the published
schema below), dispatches to the library operations, and writes primary
result files (CSV/JSON) plus a manifest.  Primary result files are a pure
function of (config, seed): floats are serialized with shortest-roundtrip
repr, rows are ordered by index, and every random quantity draws from
counter-based streams — so re-running an identical config reproduces the
files byte for byte.  The manifest additionally records wall-clock time
and therefore varies between runs; determinism claims cover the result
files, not the manifest.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import jsonschema

from . import poisoning as po
from .concentration import (
    LevyParams,
    empirical_profile,
    exact_alpha_profile,
    hypercube_levy_params,
    levy_profile,
    talagrand_profile,
)
from .errors import CalError, ConfigError
from .evasion import (
    ClassifierPair,
    as_error_region,
    error_region,
    levy_attack_bounds,
    risk_curve,
    rob_target,
)
from .learners import interval_learner, majority_learner, nn_learner
from .pc import label_masses, pc_certificates, pc_risk, pc_rob, target_label_risk, target_label_rob
from .spaces import set_from_json, space_from_json
from .verify import SUITE_NAMES, run_all

__all__ = [
    "VERSION",
    "CONFIG_SCHEMA",
    "ExperimentConfig",
    "RunManifest",
    "RunReport",
    "load_config",
    "validate_config",
    "config_hash",
    "plan",
    "run",
    "write_csv",
    "write_json",
    "LEARNERS",
    "KINDS",
]

VERSION = "1.0.0"

KINDS = ("alpha", "evasion", "robustness", "levy", "pc", "poison", "verify")

LEARNERS: Mapping[str, Callable] = {
    "interval": interval_learner,
    "majority": majority_learner,
    "nearest": nn_learner,
}

_CLASSIFIER_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["table", "threshold", "digit-sum", "constant"]},
        "assignment": {"type": "array", "items": {"type": "integer"}},
        "coordinate": {"type": "integer", "minimum": 0},
        "threshold": {"type": "number"},
        "label": {"type": "integer"},
    },
}

_PARAMETER_SCHEMAS: Mapping[str, dict] = {
    "alpha": {
        "type": "object",
        "properties": {
            "method": {"enum": ["exact", "product-bound", "levy", "empirical"]},
            "bs": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "k1": {"type": "number", "exclusiveMinimum": 0},
            "k2": {"type": "number", "exclusiveMinimum": 0},
            "n": {"type": "integer", "minimum": 1},
            "samples": {"type": "integer", "minimum": 1},
            "family": {"enum": ["auto", "balls", "subcubes", "halfspaces"]},
        },
    },
    "evasion": {
        "type": "object",
        "properties": {
            "bs": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "samples": {"type": "integer", "minimum": 1},
        },
    },
    "robustness": {
        "type": "object",
        "properties": {
            "rhos": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
    },
    "levy": {
        "type": "object",
        "required": ["k1", "k2", "n", "epsilon", "gamma", "rho"],
        "properties": {
            "k1": {"type": "number", "exclusiveMinimum": 0},
            "k2": {"type": "number", "exclusiveMinimum": 0},
            "n": {"type": "integer", "minimum": 1},
            "epsilon": {"type": "number", "exclusiveMinimum": 0},
            "gamma": {"type": "number", "exclusiveMinimum": 0},
            "rho": {"type": "number", "minimum": 0.5, "exclusiveMaximum": 1},
        },
    },
    "pc": {
        "type": "object",
        "properties": {
            "bs": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "target": {"type": "integer"},
            "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "b1": {"type": "number", "minimum": 0},
            "b2": {"type": "number", "minimum": 0},
            "b": {"type": "number", "minimum": 0},
        },
    },
    "poison": {
        "type": "object",
        "required": ["m"],
        "properties": {
            "m": {"type": "integer", "minimum": 1},
            "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "x": {"type": "array", "items": {"type": "integer"}},
            "adversary": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["identity", "budget", "average"]},
                    "b": {"type": "number", "minimum": 0},
                },
            },
            "trials": {"type": "integer", "minimum": 1},
        },
    },
    "verify": {
        "type": "object",
        "properties": {
            "suites": {
                "type": "array",
                "items": {"enum": list(SUITE_NAMES)},
                "minItems": 1,
            },
        },
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "space": {"type": "object"},
        "set": {"type": "object"},
        "classifier": _CLASSIFIER_SCHEMA,
        "concept": _CLASSIFIER_SCHEMA,
        "labels": {"type": "array", "items": {"type": "integer"}, "minItems": 2},
        "learner": {"enum": sorted(LEARNERS)},
        "parameters": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0, "maximum": (1 << 64) - 1},
        "out": {"type": "string"},
    },
    "additionalProperties": False,
}


def validate_config(config: Mapping) -> None:
    """Validate against the schema, including the per-kind parameter
    schema; raises ConfigError naming the offending field."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
        kind = config["kind"]
        jsonschema.validate(config.get("parameters", {}), _PARAMETER_SCHEMAS[kind])
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "(root)"
        raise ConfigError(f"config field {path}: {e.message}") from e


def load_config(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            config = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    validate_config(config)
    return config


def config_hash(config: Mapping) -> str:
    """sha256 over the canonical JSON form; output paths do not affect
    the hash (they do not change what is computed)."""
    reduced = {k: v for k, v in config.items() if k != "out"}
    blob = json.dumps(reduced, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("ascii")).hexdigest()


# ---------------------------------------------------------------------------
# deterministic writers
# ---------------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    """CSV with a header row, '.' decimal floats via shortest-roundtrip
    repr, and LF line endings regardless of platform."""
    with open(path, "w", encoding="ascii", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_cell(v) for v in row) + "\n")


def write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="ascii", newline="") as f:
        json.dump(payload, f, sort_keys=True, indent=2, ensure_ascii=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# classifier and learner construction
# ---------------------------------------------------------------------------


def build_classifier(spec: Mapping, space) -> Callable:
    t = spec.get("type")
    if t == "table":
        assignment = spec.get("assignment")
        n_pts = space.num_points()
        if assignment is None or n_pts is None or len(assignment) != n_pts:
            raise ConfigError("a table classifier needs one label per point")
        table = [int(v) for v in assignment]
        return lambda p: table[space.index_of(p)]
    if t == "threshold":
        coord = int(spec.get("coordinate", 0))
        thr = float(spec["threshold"])
        return lambda p: int(p[coord] > thr)
    if t == "digit-sum":
        thr = float(spec["threshold"])
        return lambda p: int(sum(p) > thr)
    if t == "constant":
        label = int(spec.get("label", 0))
        return lambda p: label
    raise ConfigError(f"unknown classifier type {spec.get('type')!r}")


def _classifier_labels(spec: Mapping) -> tuple:
    if spec.get("type") == "table":
        return tuple(sorted(set(int(v) for v in spec["assignment"])))
    if spec.get("type") == "constant":
        return (int(spec.get("label", 0)),)
    return (0, 1)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written next to every result file."""

    config_hash: str
    version: str
    seed: int
    wall_clock_seconds: float
    workers: int
    operations: tuple
    results: tuple

    def to_json(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "seed": self.seed,
            "wall_clock_seconds": self.wall_clock_seconds,
            "workers": self.workers,
            "operations": [dict(op) for op in self.operations],
            "results": [dict(r) for r in self.results],
        }


@dataclass(frozen=True)
class RunReport:
    exit_code: int
    out_dir: Path
    files: tuple
    summary: tuple

    def __str__(self):
        return "\n".join(self.summary)


@dataclass
class _Sink:
    out_dir: Path
    files: list = field(default_factory=list)
    operations: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    failed: bool = False

    def op(self, name: str, exact: bool):
        self.operations.append({"name": name, "exact": bool(exact)})

    def csv(self, name: str, header, rows):
        path = self.out_dirname(name)
        write_csv(path, header, rows)
        self.files.append(path)

    def json(self, name: str, payload):
        path = self.out_dirname(name)
        write_json(path, payload)
        self.files.append(path)

    def out_dirname(self, name: str) -> Path:
        return self.out_dir / name

    def say(self, line: str):
        self.summary.append(line)


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated configuration bound to its seed and output directory."""

    data: dict
    seed: int
    out_dir: Path

    @property
    def kind(self) -> str:
        return self.data["kind"]

    @property
    def parameters(self) -> dict:
        return self.data.get("parameters", {})

    def space(self):
        if "space" not in self.data:
            raise ConfigError(f"a {self.kind} run needs a space")
        return space_from_json(self.data["space"])


def resolve_config(
    data: Mapping, seed: int | None = None, out_dir: str | Path | None = None
) -> ExperimentConfig:
    validate_config(data)
    final_seed = seed if seed is not None else int(data.get("seed", 0))
    out = out_dir or data.get("out") or os.environ.get("CAL_OUT_DIR") or "."
    return ExperimentConfig(dict(data), final_seed, Path(out))


# ---------------------------------------------------------------------------
# kind runners
# ---------------------------------------------------------------------------


def _alpha_profile(cfg: ExperimentConfig):
    p = cfg.parameters
    method = p.get("method", "exact")
    if method == "levy":
        for key in ("k1", "k2", "n"):
            if key not in p:
                raise ConfigError(f"the levy method needs parameter {key}")
        return levy_profile(LevyParams(p["k1"], p["k2"], p["n"])), True
    space = cfg.space()
    if method == "exact":
        return exact_alpha_profile(space), True
    if method == "product-bound":
        return talagrand_profile(space), True
    if method == "empirical":
        return (
            empirical_profile(
                space,
                family=p.get("family", "auto"),
                samples=p.get("samples"),
                seed=cfg.seed,
            ),
            False,
        )
    raise ConfigError(f"unknown alpha method {method!r}")


def _default_bs(cfg: ExperimentConfig, profile=None) -> list[float]:
    bs = cfg.parameters.get("bs")
    if bs is not None:
        return [float(b) for b in bs]
    if profile is not None:
        if profile.unit is None:
            raise ConfigError("this method needs an explicit bs grid")
        count = int(round(profile.b_max / profile.unit))
        return [k * profile.unit for k in range(count + 1)]
    space = cfg.space()
    return [k * space.unit for k in range(space.n + 1)]


def _run_alpha(cfg: ExperimentConfig, sink: _Sink):
    profile, exact = _alpha_profile(cfg)
    sink.op(f"alpha:{cfg.parameters.get('method', 'exact')}", exact)
    bs = _default_bs(cfg, profile)
    rows = [(b, float(profile(b))) for b in bs]
    sink.csv("alpha.csv", ("b", "alpha"), rows)
    sink.json(
        "alpha.json",
        {
            "provenance": profile.provenance,
            "scale": profile.scale,
            "sense": profile.sense,
            "rows": [{"b": b, "alpha": a} for b, a in rows],
        },
    )
    sink.say(f"alpha: {len(rows)} radii ({profile.provenance}, {profile.sense})")


def _target_set(cfg: ExperimentConfig, space):
    if "set" in cfg.data:
        return set_from_json(space, cfg.data["set"])
    if "classifier" in cfg.data and "concept" in cfg.data:
        labels = tuple(
            cfg.data.get("labels")
            or sorted(
                set(_classifier_labels(cfg.data["classifier"]))
                | set(_classifier_labels(cfg.data["concept"]))
            )
        )
        pair = ClassifierPair(
            build_classifier(cfg.data["classifier"], space),
            build_classifier(cfg.data["concept"], space),
            labels,
        )
        return error_region(space, pair)
    raise ConfigError("the run needs either a set or a classifier/concept pair")


def _run_evasion(cfg: ExperimentConfig, sink: _Sink):
    space = cfg.space()
    target = _target_set(cfg, space)
    bs = _default_bs(cfg)
    samples = cfg.parameters.get("samples")
    curve = risk_curve(space, target, bs, samples=samples, seed=cfg.seed)
    sink.op("evasion:risk_curve", all(pt.exact for pt in curve.points))
    sink.csv(
        "risk.csv",
        ("b", "risk", "exact", "halfwidth"),
        [(pt.b, pt.value, pt.exact, pt.halfwidth) for pt in curve.points],
    )
    sink.say(f"risk: {len(curve.points)} radii")


def _run_robustness(cfg: ExperimentConfig, sink: _Sink):
    space = cfg.space()
    target = _target_set(cfg, space)
    rhos = [float(r) for r in cfg.parameters.get("rhos", (1.0,))]
    reports = [rob_target(space, target, rho) for rho in rhos]
    sink.op("robustness:rob_target", all(r.exact for r in reports))
    sink.csv(
        "rob.csv",
        ("rho_requested", "rho", "value", "radius", "method"),
        [(r.rho_requested, r.rho, r.value, r.radius, r.method) for r in reports],
    )
    sink.say(f"robustness: {len(reports)} targets")


def _run_levy(cfg: ExperimentConfig, sink: _Sink):
    p = cfg.parameters
    params = LevyParams(p["k1"], p["k2"], p["n"])
    bounds = levy_attack_bounds(params, p["epsilon"], p["gamma"], p["rho"])
    sink.op("levy:attack_bounds", True)
    payload = bounds.to_json()
    payload["params"] = {"k1": params.k1, "k2": params.k2, "n": params.n}
    sink.json("levy.json", payload)
    sink.say(f"levy: b_half={bounds.b_half!r}")


def _run_pc(cfg: ExperimentConfig, sink: _Sink):
    space = cfg.space()
    if "classifier" not in cfg.data:
        raise ConfigError("a pc run needs a classifier")
    h = build_classifier(cfg.data["classifier"], space)
    labels = tuple(cfg.data.get("labels") or _classifier_labels(cfg.data["classifier"]))
    p = cfg.parameters
    bs = _default_bs(cfg)
    masses = label_masses(space, h, labels)
    rows = [(b, pc_risk(space, h, labels, b)) for b in bs]
    sink.op("pc:risk", True)
    sink.csv("pc_risk.csv", ("b", "change_risk"), rows)
    payload = {
        "masses": {str(l): masses[l] for l in labels},
        "change_risk": [{"b": b, "value": v} for b, v in rows],
    }
    if len(set(masses.values())) > 1 or min(masses.values()) > 0.0:
        try:
            payload["change_rob"] = pc_rob(space, h, labels)
        except ValueError:
            pass
    target = p.get("target")
    if target is not None:
        payload["target_risk"] = [
            {"b": b, "value": target_label_risk(space, h, labels, target, b)} for b in bs
        ]
        if masses.get(target, 0.0) > 0.0:
            payload["target_rob"] = target_label_rob(space, h, labels, target)
    if "gamma" in p and "b1" in p and "b2" in p:
        profile = exact_alpha_profile(space)
        b = p.get("b")
        certs = pc_certificates(
            profile,
            masses,
            p["b1"],
            p["b2"],
            p["gamma"],
            target_label=target,
            b=b,
            pc_risk_at_b=pc_risk(space, h, labels, b) if b is not None else None,
        )
        payload["certificates"] = certs.to_json()
        sink.op("pc:certificates", True)
    sink.json("pc.json", payload)
    sink.say(f"pc: {len(rows)} radii, {len(labels)} labels")


def _run_poison(cfg: ExperimentConfig, sink: _Sink):
    space = cfg.space()
    if "learner" not in cfg.data or "concept" not in cfg.data:
        raise ConfigError("a poison run needs a learner and a concept")
    learner = LEARNERS[cfg.data["learner"]]()
    concept = build_classifier(cfg.data["concept"], space)
    p = cfg.parameters
    m = p["m"]
    adv_spec = p.get("adversary", {"kind": "identity"})
    adv_kind = adv_spec["kind"]
    b = adv_spec.get("b")
    if adv_kind == "budget" and b is None:
        raise ConfigError("a budget adversary needs parameter adversary.b")
    trials = p.get("trials")
    payload: dict = {"m": m, "adversary": adv_kind}
    if b is not None:
        payload["budget"] = float(b)
    exact_mode = trials is None
    if "epsilon" in p:
        eps = p["epsilon"]
        if exact_mode:
            pred = po.risk_exceeds(space, concept, eps)
            delta = po.baseline_failure_rate(space, concept, learner, pred, m)
            payload["delta"] = delta
            payload["conf"] = po.conf_exact(
                space, concept, learner, eps, m, adv_kind, b=b, pred=pred
            )
            if 0.0 < delta < 1.0:
                payload["mean_failure_distance"] = po.mean_failure_distance(
                    space, concept, learner, pred, m
                )
                payload["avg_budget_bound"] = po.avg_budget_formula(delta, m)
                if "gamma" in p:
                    payload["budget_bound"] = po.budget_formula(delta, p["gamma"], m)
        else:
            adversary = _build_adversary(adv_spec, space, concept, learner, eps, cfg.seed)
            est = po.conf_estimate(
                space, concept, learner, eps, m, adversary, trials, seed=cfg.seed
            )
            payload["conf"] = est.to_json()
            sink.csv(
                "poison_trials.csv",
                ("trial", "substitutions", "bad"),
                est.rows,
            )
        sink.op("poison:conf", exact_mode)
    if "x" in p:
        x = tuple(int(v) for v in p["x"])
        if exact_mode:
            eps_x = po.err_exact(space, concept, learner, x, m, "identity")
            payload["err_identity"] = eps_x
            payload["err"] = po.err_exact(space, concept, learner, x, m, adv_kind, b=b)
            if "gamma" in p and 0.0 < eps_x < 1.0:
                payload["chosen_budget_bound"] = po.chosen_budget_formula(
                    eps_x, p["gamma"], m
                )
        else:
            pred = po.misclassifies(x, concept)
            adversary = _build_adversary(
                adv_spec, space, concept, learner, None, cfg.seed, pred=pred
            )
            est = po.err_estimate(
                space, concept, learner, x, m, adversary, trials, seed=cfg.seed
            )
            payload["err"] = est.to_json()
            sink.csv(
                "poison_err_trials.csv",
                ("trial", "substitutions", "bad"),
                est.rows,
            )
        sink.op("poison:err", exact_mode)
    if "epsilon" not in p and "x" not in p:
        raise ConfigError("a poison run needs epsilon (confidence) or x (chosen instance)")
    sink.json("poison.json", payload)
    sink.say(f"poison: m={m}, adversary={adv_kind}, {'exact' if exact_mode else 'sampled'}")


def _build_adversary(adv_spec, space, concept, learner, epsilon, seed, pred=None):
    kind = adv_spec["kind"]
    if kind == "identity":
        return po.identity_adversary()
    if pred is None:
        pred = po.risk_exceeds(space, concept, epsilon)
    if kind == "budget":
        return po.budget_adversary(pred, learner, concept, space, adv_spec["b"], seed=seed)
    return po.average_adversary(pred, learner, concept, space, seed=seed)


def _run_verify(cfg: ExperimentConfig, sink: _Sink):
    suites = cfg.parameters.get("suites")
    results = run_all(seed=cfg.seed, suites=suites)
    sink.op("verify:suites", True)
    sink.csv(
        "verify.csv",
        ("suite", "passed", "checks", "failures"),
        [(r.suite, r.passed, r.checks, len(r.failures)) for r in results],
    )
    sink.json("verify.json", {"seed": cfg.seed, "suites": [r.to_json() for r in results]})
    for r in results:
        sink.say(f"{'PASS' if r.passed else 'FAIL'} {r.suite} ({r.checks} checks)")
        if not r.passed:
            sink.failed = True
            for msg in r.failures[:3]:
                sink.say(f"  ! {msg}")


_RUNNERS: Mapping[str, Callable] = {
    "alpha": _run_alpha,
    "evasion": _run_evasion,
    "robustness": _run_robustness,
    "levy": _run_levy,
    "pc": _run_pc,
    "poison": _run_poison,
    "verify": _run_verify,
}


# ---------------------------------------------------------------------------
# plan / run
# ---------------------------------------------------------------------------


def plan(cfg: ExperimentConfig) -> dict:
    """The resolved execution plan, computed without running anything."""
    outputs = {
        "alpha": ["alpha.csv", "alpha.json"],
        "evasion": ["risk.csv"],
        "robustness": ["rob.csv"],
        "levy": ["levy.json"],
        "pc": ["pc_risk.csv", "pc.json"],
        "poison": ["poison.json"],
        "verify": ["verify.csv", "verify.json"],
    }[cfg.kind]
    resolved = {
        "kind": cfg.kind,
        "seed": cfg.seed,
        "out_dir": str(cfg.out_dir),
        "config_hash": config_hash(cfg.data),
        "outputs": outputs + ["manifest.json"],
        "parameters": cfg.parameters,
    }
    if cfg.kind == "verify":
        resolved["suites"] = list(cfg.parameters.get("suites", SUITE_NAMES))
    return resolved


def run(cfg: ExperimentConfig, dry_run: bool = False) -> RunReport:
    """Execute the configured experiment; on dry_run only report the plan."""
    if dry_run:
        lines = [f"{k}: {v}" for k, v in sorted(plan(cfg).items())]
        return RunReport(0, cfg.out_dir, (), tuple(lines))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    sink = _Sink(cfg.out_dir)
    started = time.monotonic()
    try:
        _RUNNERS[cfg.kind](cfg, sink)
    except (CalError, ValueError, KeyError) as e:
        raise ConfigError(f"{cfg.kind} run failed: {e}") from e
    wall = time.monotonic() - started
    results = []
    for path in sink.files:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        results.append({"file": path.name, "sha256": digest})
    manifest = RunManifest(
        config_hash=config_hash(cfg.data),
        version=VERSION,
        seed=cfg.seed,
        wall_clock_seconds=wall,
        workers=1,
        operations=tuple(sink.operations),
        results=tuple(results),
    )
    manifest_path = cfg.out_dir / "manifest.json"
    write_json(manifest_path, manifest.to_json())
    files = tuple(sink.files) + (manifest_path,)
    return RunReport(1 if sink.failed else 0, cfg.out_dir, files, tuple(sink.summary))
