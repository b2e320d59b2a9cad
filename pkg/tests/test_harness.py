"""Experiment harness: config validation, deterministic writers, runners,
and the command-line interface."""

import json
import math
import os
import subprocess
import sys

import pytest

from cal.cli import main as cli_main
from cal.errors import ConfigError
from cal.harness import (
    VERSION,
    build_classifier,
    config_hash,
    load_config,
    plan,
    resolve_config,
    run,
    validate_config,
    write_csv,
    write_json,
)
from cal.spaces import build_hypercube, build_product, space_to_json

CUBE3 = space_to_json(build_product([2, 2, 2]))
LINE4 = space_to_json(build_product([4]))

ALPHA_CFG = {
    "kind": "alpha",
    "space": CUBE3,
    "parameters": {"method": "exact"},
}

EVASION_CFG = {
    "kind": "evasion",
    "space": CUBE3,
    "classifier": {"type": "constant", "label": 0},
    "concept": {"type": "table", "assignment": [0, 0, 0, 0, 0, 0, 0, 1]},
}

ROB_CFG = {
    "kind": "robustness",
    "space": CUBE3,
    "classifier": {"type": "constant", "label": 0},
    "concept": {"type": "table", "assignment": [0, 0, 0, 0, 0, 0, 0, 1]},
    "parameters": {"rhos": [0.5, 1.0]},
}

LEVY_CFG = {
    "kind": "levy",
    "parameters": {"k1": 2.0, "k2": 1.0, "n": 100, "epsilon": 0.1, "gamma": 0.1, "rho": 0.9},
}

PC_CFG = {
    "kind": "pc",
    "space": CUBE3,
    "classifier": {"type": "digit-sum", "threshold": 1.5},
    "parameters": {"gamma": 0.3, "b1": 1.0, "b2": 1.0, "b": 1.0, "target": 1},
}

POISON_CFG = {
    "kind": "poison",
    "space": LINE4,
    "learner": "interval",
    "concept": {"type": "threshold", "coordinate": 0, "threshold": 1.5},
    "parameters": {"m": 3, "epsilon": 0.25, "gamma": 0.3, "x": [1]},
}

VERIFY_CFG = {"kind": "verify", "parameters": {"suites": ["mcdiarmid"]}}


def read(path):
    return path.read_text(encoding="ascii")


class TestValidation:
    def test_good_configs_pass(self):
        for cfg in (ALPHA_CFG, EVASION_CFG, ROB_CFG, LEVY_CFG, PC_CFG, POISON_CFG, VERIFY_CFG):
            validate_config(cfg)

    def test_missing_kind_names_the_field(self):
        with pytest.raises(ConfigError, match="config field"):
            validate_config({"space": CUBE3})

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError, match="kind"):
            validate_config({"kind": "banquet"})

    def test_unknown_top_level_key_rejected(self):
        bad = dict(ALPHA_CFG, extra=1)
        with pytest.raises(ConfigError, match="extra"):
            validate_config(bad)

    def test_per_kind_parameters_are_checked(self):
        bad = {"kind": "levy", "parameters": {"k1": 2.0}}
        with pytest.raises(ConfigError):
            validate_config(bad)
        bad_rho = {
            "kind": "levy",
            "parameters": dict(LEVY_CFG["parameters"], rho=0.4),
        }
        with pytest.raises(ConfigError, match="rho"):
            validate_config(bad_rho)
        with pytest.raises(ConfigError, match="m"):
            validate_config({"kind": "poison", "space": LINE4, "parameters": {}})

    def test_seed_bounds(self):
        with pytest.raises(ConfigError, match="seed"):
            validate_config(dict(ALPHA_CFG, seed=-1))
        with pytest.raises(ConfigError, match="seed"):
            validate_config(dict(ALPHA_CFG, seed=1 << 64))
        validate_config(dict(ALPHA_CFG, seed=(1 << 64) - 1))

    def test_load_config_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "broken.json"
        bad.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(bad)


class TestConfigHash:
    def test_stable_under_key_order(self):
        a = {"kind": "alpha", "space": CUBE3, "seed": 7}
        b = {"seed": 7, "space": CUBE3, "kind": "alpha"}
        assert config_hash(a) == config_hash(b)

    def test_out_path_is_excluded(self):
        a = dict(ALPHA_CFG)
        b = dict(ALPHA_CFG, out="/somewhere/else")
        assert config_hash(a) == config_hash(b)

    def test_semantic_changes_change_the_hash(self):
        assert config_hash(ALPHA_CFG) != config_hash(
            dict(ALPHA_CFG, parameters={"method": "product-bound"})
        )


class TestWriters:
    def test_csv_format(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ("a", "b", "c"), [(1, 1 / 3, True), (2, 0.5, False)])
        raw = path.read_bytes()
        assert raw == b"a,b,c\n1,0.3333333333333333,true\n2,0.5,false\n"

    def test_json_format(self, tmp_path):
        path = tmp_path / "t.json"
        write_json(path, {"b": 1.5, "a": [1, 2]})
        raw = path.read_bytes()
        assert raw == b'{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1.5\n}\n'

    def test_floats_round_trip(self, tmp_path):
        path = tmp_path / "f.csv"
        value = 0.17308183826022855
        write_csv(path, ("v",), [(value,)])
        assert float(read(path).splitlines()[1]) == value


class TestClassifiers:
    def test_table(self, ):
        space = build_product([2, 2, 2])
        h = build_classifier({"type": "table", "assignment": [0, 1, 0, 1, 0, 1, 0, 1]}, space)
        assert h((0, 0, 0)) == 0
        assert h(space.point(1)) == 1

    def test_threshold_and_digit_sum_and_constant(self):
        space = build_product([4])
        thr = build_classifier({"type": "threshold", "coordinate": 0, "threshold": 1.5}, space)
        assert [thr((i,)) for i in range(4)] == [0, 0, 1, 1]
        cube = build_product([2, 2, 2])
        ds = build_classifier({"type": "digit-sum", "threshold": 1.5}, cube)
        assert ds((1, 1, 0)) == 1 and ds((1, 0, 0)) == 0
        const = build_classifier({"type": "constant", "label": 3}, cube)
        assert const((0, 0, 0)) == 3


class TestResolution:
    def test_seed_precedence(self):
        assert resolve_config(dict(ALPHA_CFG, seed=9)).seed == 9
        assert resolve_config(dict(ALPHA_CFG, seed=9), seed=4).seed == 4
        assert resolve_config(ALPHA_CFG).seed == 0

    def test_out_precedence(self, monkeypatch, tmp_path):
        monkeypatch.delenv("CAL_OUT_DIR", raising=False)
        assert str(resolve_config(ALPHA_CFG).out_dir) == "."
        monkeypatch.setenv("CAL_OUT_DIR", str(tmp_path / "env"))
        assert resolve_config(ALPHA_CFG).out_dir == tmp_path / "env"
        cfg_out = dict(ALPHA_CFG, out=str(tmp_path / "cfg"))
        assert resolve_config(cfg_out).out_dir == tmp_path / "cfg"
        assert (
            resolve_config(cfg_out, out_dir=tmp_path / "flag").out_dir == tmp_path / "flag"
        )

    def test_plan_lists_outputs_without_running(self, tmp_path):
        cfg = resolve_config(ALPHA_CFG, out_dir=tmp_path)
        resolved = plan(cfg)
        assert resolved["kind"] == "alpha"
        assert resolved["outputs"] == ["alpha.csv", "alpha.json", "manifest.json"]
        assert resolved["config_hash"] == config_hash(ALPHA_CFG)
        assert list(tmp_path.iterdir()) == []  # nothing written

    def test_dry_run_writes_nothing(self, tmp_path):
        report = run(resolve_config(ALPHA_CFG, out_dir=tmp_path / "d"), dry_run=True)
        assert report.exit_code == 0
        assert not (tmp_path / "d").exists()


class TestRunners:
    def test_alpha_run_frozen_counts(self, tmp_path):
        report = run(resolve_config(ALPHA_CFG, out_dir=tmp_path))
        assert report.exit_code == 0
        lines = read(tmp_path / "alpha.csv").splitlines()
        assert lines[0] == "b,alpha"
        assert lines[1:] == ["0.0,0.5", "1.0,0.125", "2.0,0.0", "3.0,0.0"]
        doc = json.loads(read(tmp_path / "alpha.json"))
        assert doc["provenance"] == "exact" and doc["sense"] == "exact"
        manifest = json.loads(read(tmp_path / "manifest.json"))
        assert manifest["version"] == VERSION
        assert {r["file"] for r in manifest["results"]} == {"alpha.csv", "alpha.json"}

    def test_evasion_run_frozen_curve(self, tmp_path):
        report = run(resolve_config(EVASION_CFG, out_dir=tmp_path))
        assert report.exit_code == 0
        lines = read(tmp_path / "risk.csv").splitlines()
        assert lines[0] == "b,risk,exact,halfwidth"
        values = [line.split(",")[1] for line in lines[1:]]
        assert values == ["0.125", "0.5", "0.875", "1.0"]

    def test_robustness_run_frozen_values(self, tmp_path):
        report = run(resolve_config(ROB_CFG, out_dir=tmp_path))
        assert report.exit_code == 0
        lines = read(tmp_path / "rob.csv").splitlines()
        assert lines[1].startswith("0.5,0.5,0.375,1.0,curve-exact")
        assert lines[2].startswith("1.0,1.0,1.5,3.0,curve-exact")

    def test_levy_run_frozen_bounds(self, tmp_path):
        report = run(resolve_config(LEVY_CFG, out_dir=tmp_path))
        assert report.exit_code == 0
        doc = json.loads(read(tmp_path / "levy.json"))
        assert doc["b_half"] == pytest.approx(0.17308183826022855, abs=1e-15)
        assert doc["params"] == {"k1": 2.0, "k2": 1.0, "n": 100}
        assert doc["b_to_one_minus_gamma"] >= doc["b_to_one_minus_gamma_single_root"]

    def test_pc_run_emits_certificates(self, tmp_path):
        report = run(resolve_config(PC_CFG, out_dir=tmp_path))
        assert report.exit_code == 0
        doc = json.loads(read(tmp_path / "pc.json"))
        assert set(doc["certificates"]) == {
            "change_risk", "target_risk", "change_rob", "target_rob",
        }
        assert doc["masses"] == {"0": 0.5, "1": 0.5}
        risk_rows = read(tmp_path / "pc_risk.csv").splitlines()[1:]
        assert risk_rows[0] == "0.0,0.0"
        assert risk_rows[-1].endswith(",1.0")

    def test_poison_exact_run(self, tmp_path):
        report = run(resolve_config(POISON_CFG, out_dir=tmp_path))
        assert report.exit_code == 0
        doc = json.loads(read(tmp_path / "poison.json"))
        assert doc["m"] == 3 and doc["adversary"] == "identity"
        assert 0.0 < doc["delta"] < 1.0
        assert doc["conf"] == pytest.approx(1.0 - doc["delta"], abs=1e-12)
        assert doc["mean_failure_distance"] <= doc["avg_budget_bound"] + 1e-12
        assert doc["budget_bound"] == pytest.approx(
            math.sqrt(-math.log(doc["delta"] * 0.3) * 3), abs=1e-12
        )
        assert "err" in doc and "err_identity" in doc

    def test_poison_estimate_run(self, tmp_path):
        cfg = dict(
            POISON_CFG,
            parameters={
                "m": 3, "epsilon": 0.25, "trials": 50,
                "adversary": {"kind": "budget", "b": 1.0},
            },
        )
        report = run(resolve_config(cfg, seed=5, out_dir=tmp_path))
        assert report.exit_code == 0
        doc = json.loads(read(tmp_path / "poison.json"))
        assert doc["conf"]["trials"] == 50
        rows = read(tmp_path / "poison_trials.csv").splitlines()
        assert rows[0] == "trial,substitutions,bad"
        assert len(rows) == 51

    def test_verify_run_small_suite(self, tmp_path):
        report = run(resolve_config(VERIFY_CFG, out_dir=tmp_path))
        assert report.exit_code == 0
        lines = read(tmp_path / "verify.csv").splitlines()
        assert lines[0] == "suite,passed,checks,failures"
        assert lines[1].startswith("mcdiarmid,true,")
        doc = json.loads(read(tmp_path / "verify.json"))
        assert doc["suites"][0]["passed"] is True

    def test_runtime_errors_become_config_errors(self, tmp_path):
        cfg = {
            "kind": "alpha",
            "space": space_to_json(build_hypercube(5)),  # 32 points > exact cap
            "parameters": {"method": "exact"},
        }
        with pytest.raises(ConfigError, match="alpha run failed"):
            run(resolve_config(cfg, out_dir=tmp_path))

    def test_byte_identical_reruns(self, tmp_path):
        out1, out2 = tmp_path / "one", tmp_path / "two"
        run(resolve_config(POISON_CFG, seed=3, out_dir=out1))
        run(resolve_config(POISON_CFG, seed=3, out_dir=out2))
        assert (out1 / "poison.json").read_bytes() == (out2 / "poison.json").read_bytes()
        m1 = json.loads(read(out1 / "manifest.json"))
        m2 = json.loads(read(out2 / "manifest.json"))
        assert m1["results"] == m2["results"]  # hashes agree; wall clock may differ


class TestCli:
    def write_cfg(self, tmp_path, data):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    def test_alpha_happy_path(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, ALPHA_CFG)
        code = cli_main(["alpha", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        assert (tmp_path / "out" / "alpha.csv").exists()
        assert "wrote" in capsys.readouterr().out

    def test_wrong_kind_for_subcommand(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, ALPHA_CFG)
        code = cli_main(["risk", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 2
        assert "kind" in capsys.readouterr().err

    def test_invalid_config_exits_2(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, {"kind": "levy", "parameters": {"k1": 1.0}})
        code = cli_main(["levy", "--config", cfg])
        assert code == 2
        assert "config field" in capsys.readouterr().err

    def test_missing_config_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            cli_main(["alpha"])
        assert exc.value.code == 2

    def test_bad_seed_exits_2(self, tmp_path):
        cfg = self.write_cfg(tmp_path, ALPHA_CFG)
        with pytest.raises(SystemExit) as exc:
            cli_main(["alpha", "--config", cfg, "--seed", "-3"])
        assert exc.value.code == 2

    def test_verify_without_config(self, tmp_path, capsys):
        code = cli_main(
            ["verify", "--out", str(tmp_path), "--dry-run"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "verify" in out

    def test_dry_run_prints_plan(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, ALPHA_CFG)
        code = cli_main(["alpha", "--config", cfg, "--dry-run", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "config_hash" in out and "alpha.csv" in out

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main(["--version"])
        assert exc.value.code == 0
        assert VERSION in capsys.readouterr().out

    def test_seed_flag_overrides_config(self, tmp_path):
        data = dict(VERIFY_CFG, seed=3)
        cfg = self.write_cfg(tmp_path, data)
        code = cli_main(["verify", "--config", cfg, "--seed", "8", "--out", str(tmp_path / "o")])
        assert code == 0
        doc = json.loads(read(tmp_path / "o" / "verify.json"))
        assert doc["seed"] == 8

    def test_console_script_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "cal.cli", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert VERSION in proc.stdout
