import hashlib
import json
import os
import subprocess
import sys

import pytest

from paulitel.cli import main


def run_cli(tmp_path, cfg, *extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return main(["--config", str(path), *extra])


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestValidation:
    def test_unknown_field_rejected(self, tmp_path, capsys):
        cfg = {
            "subcommand": "syk-correlator",
            "parameters": {"n_fermions": 10, "t": {"start": 0, "stop": 1, "num": 2}},
            "mystery": 1,
        }
        assert run_cli(tmp_path, cfg) == 1
        assert "mystery" in capsys.readouterr().err

    def test_unknown_parameter_field_path(self, tmp_path, capsys):
        cfg = {
            "subcommand": "stringy",
            "parameters": {
                "delta": 2.0,
                "epsilon_str": 0.5,
                "g_n": 0.1,
                "g": 1.0,
                "t": {"start": 0, "stop": 1, "num": 2},
                "oops": True,
            },
        }
        assert run_cli(tmp_path, cfg) == 1
        assert "oops" in capsys.readouterr().err

    def test_bad_value_diagnostic(self, tmp_path, capsys):
        cfg = {
            "subcommand": "capacity",
            "parameters": {"k_list": [16], "epsilon_th": 3.0},
        }
        assert run_cli(tmp_path, cfg) == 1
        assert "epsilon_th" in capsys.readouterr().err

    def test_missing_config_file(self, capsys):
        assert main(["--config", "/nonexistent/x.json"]) == 1


class TestRuns:
    def test_minimal_syk_correlator(self, tmp_path):
        out = tmp_path / "c.csv"
        cfg = {
            "subcommand": "syk-correlator",
            "seed": 3,
            "parameters": {
                "n_fermions": 50,
                "q": 4,
                "p": 1,
                "j": 1.0,
                "beta": 0.0,
                "g": 0.0,
                "t": {"start": 0.0, "stop": 2.0, "num": 3},
            },
        }
        assert run_cli(tmp_path, cfg, "--out", str(out)) == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 4
        for line in lines[1:]:
            assert float(line.split(",")[3]) == pytest.approx(1.0)
        manifest = json.loads((tmp_path / "c.csv.manifest.json").read_text())
        assert manifest["config"]["seed"] == 3
        assert manifest["outputs"] == [str(out)]

    def test_replay_identical_digests(self, tmp_path):
        cfg = {
            "subcommand": "ruc-fidelity",
            "seed": 11,
            "parameters": {
                "dimension": 1,
                "extent": 32,
                "depth": 16,
                "coupling": {"kind": "size", "g": 3.14, "subsystem": {"kind": "all"}},
                "t": [4, 16],
                "realizations": 6,
            },
        }
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_cli(tmp_path, cfg, "--out", str(a)) == 0
        assert run_cli(tmp_path, cfg, "--out", str(b)) == 0
        assert digest(a) == digest(b)

    def test_worker_count_does_not_change_output(self, tmp_path):
        cfg = {
            "subcommand": "ruc-size",
            "seed": 4,
            "parameters": {
                "dimension": 0,
                "extent": 128,
                "depth": 8,
                "p": 3,
                "realizations": 6,
            },
        }
        a, b = tmp_path / "w1.csv", tmp_path / "w4.csv"
        assert run_cli(tmp_path, cfg, "--out", str(a), "--workers", "1") == 0
        assert run_cli(tmp_path, cfg, "--out", str(b), "--workers", "4") == 0
        assert digest(a) == digest(b)

    def test_seed_override_changes_output(self, tmp_path):
        cfg = {
            "subcommand": "ruc-size",
            "seed": 4,
            "parameters": {"dimension": 0, "extent": 64, "depth": 6, "realizations": 4},
        }
        a, b = tmp_path / "s4.csv", tmp_path / "s5.csv"
        assert run_cli(tmp_path, cfg, "--out", str(a)) == 0
        assert run_cli(tmp_path, cfg, "--out", str(b), "--seed", "5") == 0
        assert digest(a) != digest(b)

    def test_numerical_failure_exit_code(self, tmp_path):
        cfg = {
            "subcommand": "stringy",
            "parameters": {
                "delta": 8.0,
                "epsilon_str": 1.0,
                "g_n": 1e-4,
                "g": 1.0,
                "t": {"start": 12.0, "stop": 13.0, "num": 2},
            },
        }
        assert run_cli(tmp_path, cfg, "--out", str(tmp_path / "x.csv")) == 2

    def test_bound_run_with_comparison(self, tmp_path):
        out = tmp_path / "bound.csv"
        cfg = {
            "subcommand": "bound",
            "parameters": {
                "delta": 50.0,
                "x": 0.5,
                "n_max": 2000,
                "eta": {"start": 0.005, "stop": 0.6, "num": 120},
                "beta_j": 50.0,
            },
        }
        assert run_cli(tmp_path, cfg, "--out", str(out)) == 0
        manifest = json.loads((out.parent / "bound.csv.manifest.json").read_text())
        assert manifest["info"]["bound_inconclusive"] is True

    def test_overlap_oracle_small(self, tmp_path):
        out = tmp_path / "ov.csv"
        cfg = {
            "subcommand": "overlap-oracle",
            "seed": 9,
            "parameters": {"n": 200, "r1": 20, "r2": 30, "samples": 2000},
        }
        assert run_cli(tmp_path, cfg, "--out", str(out)) == 0
        manifest = json.loads((out.parent / "ov.csv.manifest.json").read_text())
        assert manifest["info"]["total_variation"] < 0.15

    def test_env_worker_override(self, tmp_path):
        cfg = {
            "subcommand": "ruc-size",
            "seed": 4,
            "workers": 1,
            "parameters": {"dimension": 0, "extent": 64, "depth": 4, "realizations": 3},
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "env.csv"
        env = dict(os.environ, PAULITEL_WORKERS="2")
        proc = subprocess.run(
            [sys.executable, "-m", "paulitel.cli", "--config", str(path), "--out", str(out)],
            capture_output=True,
            env=env,
        )
        assert proc.returncode == 0
        manifest = json.loads((tmp_path / "env.csv.manifest.json").read_text())
        assert manifest["config"]["workers"] == 2
