import json
import os

import numpy as np
import pytest

from nonstat_opt.cli import (CSV_HEADER, TRAJECTORY_HEADER, ConfigError,
                             ExperimentConfig, main)


def write_config(tmp_path, **overrides):
    cfg = {
        "problem": {"kind": "quadratic", "dim": 6, "n": 18, "seed": 0,
                    "radius": 1.0},
        "schedule": {"kind": "piecewise_linear"},
        "policies": ["constant", "idealized", "adaptive", "variance_adaptive"],
        "T": [60],
        "alpha": [0.5],
        "seeds": list(range(10)),
        "out": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


class TestSweep:
    def test_grid_cardinality_and_header(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["sweep", "--config", str(cfg)]) == 0
        lines = (tmp_path / "out" / "results.csv").read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 4 * 1 * 1 * 10
        assert (tmp_path / "out" / "summary.csv").exists()

    def test_repeated_sweeps_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path)
        main(["sweep", "--config", str(cfg)])
        first = (tmp_path / "out" / "results.csv").read_bytes()
        main(["sweep", "--config", str(cfg)])
        second = (tmp_path / "out" / "results.csv").read_bytes()
        assert first == second

    def test_worker_count_does_not_change_bytes(self, tmp_path):
        cfg = write_config(tmp_path)
        main(["sweep", "--config", str(cfg), "--workers", "1"])
        serial = (tmp_path / "out" / "results.csv").read_bytes()
        main(["sweep", "--config", str(cfg), "--workers", "4"])
        parallel = (tmp_path / "out" / "results.csv").read_bytes()
        assert serial == parallel

    def test_query_accounting_in_rows(self, tmp_path):
        cfg = write_config(tmp_path, seeds=[0])
        main(["sweep", "--config", str(cfg)])
        rows = (tmp_path / "out" / "results.csv").read_text().splitlines()[1:]
        queries = {r.split(",")[1]: int(r.split(",")[8]) for r in rows}
        T = 60
        assert queries["constant"] == T
        assert queries["idealized"] == T
        assert queries["adaptive"] == T + 1
        assert queries["variance_adaptive"] == 2 * (T + 1)

    def test_flags_override_config(self, tmp_path):
        cfg = write_config(tmp_path)
        main(["sweep", "--config", str(cfg), "--policy", "constant",
              "--T", "40", "--seed", "3"])
        rows = (tmp_path / "out" / "results.csv").read_text().splitlines()[1:]
        assert len(rows) == 1
        _, policy, T, _, seed, *_ = rows[0].split(",")
        assert (policy, T, seed) == ("constant", "40", "3")

    def test_variant_policies_run(self, tmp_path):
        cfg = write_config(tmp_path, seeds=[0],
                           policies=["adaptive_first_moment", "pnorm", "window"],
                           overrides={"p": 3.0, "window": 8})
        assert main(["sweep", "--config", str(cfg)]) == 0
        rows = (tmp_path / "out" / "results.csv").read_text().splitlines()[1:]
        assert {r.split(",")[1] for r in rows} == {"adaptive_first_moment",
                                                   "pnorm", "window"}
        # every variant consumes one estimator seed sample
        assert all(int(r.split(",")[8]) == 61 for r in rows)

    def test_bound_const_flag_scales_adaptive_bound(self, tmp_path):
        cfg = write_config(tmp_path, policies=["adaptive"], seeds=[0])
        main(["sweep", "--config", str(cfg), "--bound-const", "4"])
        b4 = float((tmp_path / "out" / "results.csv")
                   .read_text().splitlines()[1].split(",")[6])
        main(["sweep", "--config", str(cfg), "--bound-const", "32"])
        b32 = float((tmp_path / "out" / "results.csv")
                    .read_text().splitlines()[1].split(",")[6])
        # CSV carries 12 significant digits, so compare just above that
        assert b32 == pytest.approx(8 * b4, rel=1e-9)

    def test_nonconvex_problem_policies(self, tmp_path):
        cfg = write_config(
            tmp_path, seeds=[0],
            problem={"kind": "smooth_nonconvex", "dim": 6, "seed": 1,
                     "radius": 1.0},
            policies=["constant", "idealized", "variance_adaptive"])
        assert main(["sweep", "--config", str(cfg)]) == 0
        rows = (tmp_path / "out" / "results.csv").read_text().splitlines()[1:]
        assert len(rows) == 3
        assert all(float(r.split(",")[5]) >= 0 for r in rows)

    def test_divergent_run_flags_row_and_exit_code(self, tmp_path):
        # an untunable fixed step this large overflows on this problem
        cfg = write_config(tmp_path, policies=["idealized"], seeds=[0],
                           overrides={}, T=[60])
        # force divergence through a custom schedule with tiny levels
        levels = tmp_path / "levels.txt"
        levels.write_text("\n".join(["1e-200"] * 60) + "\n", encoding="utf-8")
        cfg = write_config(tmp_path, policies=["idealized"], seeds=[0],
                           schedule={"kind": "custom", "path": str(levels)})
        assert main(["sweep", "--config", str(cfg)]) == 1
        row = (tmp_path / "out" / "results.csv").read_text().splitlines()[1]
        assert row.split(",")[5] == "nan"


class TestRunMode:
    def test_trajectory_dump(self, tmp_path):
        cfg = write_config(tmp_path, policies=["adaptive"], seeds=[1])
        assert main(["run", "--config", str(cfg)]) == 0
        out = tmp_path / "out"
        traj = list(out.glob("trajectory_*.csv"))
        assert len(traj) == 1
        lines = traj[0].read_text().splitlines()
        assert lines[0] == TRAJECTORY_HEADER
        assert len(lines) == 1 + 60
        k, eta, metric, est, level = lines[1].split(",")
        assert k == "1" and float(eta) > 0 and float(level) > 0
        assert float(est) >= 0

    def test_baseline_trajectory_has_nan_estimator_column(self, tmp_path):
        cfg = write_config(tmp_path, policies=["constant"], seeds=[0])
        main(["run", "--config", str(cfg)])
        traj = next((tmp_path / "out").glob("trajectory_*.csv"))
        assert traj.read_text().splitlines()[1].split(",")[3] == "nan"


class TestVerifyCommand:
    def test_jensen_suite_report(self, tmp_path):
        out = tmp_path / "v"
        assert main(["verify", "--suite", "jensen", "--out", str(out)]) == 0
        report = json.loads((out / "verify_report.json").read_text())
        assert report["jensen"]["passed"] is True
        names = {c["name"] for c in report["jensen"]["criteria"]}
        assert "idealized-below-constant" in names

    def test_unknown_suite_is_a_config_error(self, tmp_path):
        assert main(["verify", "--suite", "nope", "--out", str(tmp_path)]) == 2

    def test_regret_suite_report_serializes(self, tmp_path):
        # regression: numpy scalars in suite results must not break the report
        out = tmp_path / "v"
        assert main(["verify", "--suite", "regret", "--out", str(out)]) == 0
        report = json.loads((out / "verify_report.json").read_text())
        assert report["regret"]["passed"] is True
        for crit in report["regret"]["criteria"]:
            assert isinstance(crit["measured"], float)


class TestScheduleDump:
    def test_stdout_dump(self, tmp_path, capsys):
        cfg = write_config(tmp_path, T=[10])
        assert main(["schedule-dump", "--config", str(cfg)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "k,level"
        assert len(lines) == 11
        assert lines[5].startswith("5,")

    def test_custom_schedule_roundtrip(self, tmp_path, capsys):
        levels = tmp_path / "levels.txt"
        levels.write_text("0.5\n1.5\n2.5\n", encoding="utf-8")
        cfg = write_config(tmp_path, T=[3],
                           schedule={"kind": "custom", "path": str(levels)})
        main(["schedule-dump", "--config", str(cfg)])
        out = capsys.readouterr().out.splitlines()
        assert out[1:] == ["1,0.5", "2,1.5", "3,2.5"]


class TestConfigHandling:
    def test_missing_config_file(self, tmp_path):
        assert main(["sweep", "--config", str(tmp_path / "absent.json")]) == 2

    def test_invalid_policy_rejected(self, tmp_path):
        cfg = write_config(tmp_path, policies=["sorcery"])
        assert main(["sweep", "--config", str(cfg)]) == 2

    def test_invalid_bound_const_rejected(self, tmp_path):
        cfg = write_config(tmp_path, overrides={"bound_const": 7})
        assert main(["sweep", "--config", str(cfg)]) == 2

    def test_horizon_floor(self, tmp_path):
        cfg = write_config(tmp_path, T=[2])
        assert main(["sweep", "--config", str(cfg)]) == 2

    def test_workers_env_var(self, monkeypatch):
        cfg = ExperimentConfig()
        monkeypatch.setenv("NONSTAT_OPT_WORKERS", "3")
        assert cfg.resolved_workers() == 3
        monkeypatch.setenv("NONSTAT_OPT_WORKERS", "zebra")
        with pytest.raises(ConfigError):
            cfg.resolved_workers()
        monkeypatch.delenv("NONSTAT_OPT_WORKERS")
        cfg.workers = 5
        assert cfg.resolved_workers() == 5
