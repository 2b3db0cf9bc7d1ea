import json
import subprocess
import sys

import numpy as np
import pytest

from zoprox.tableio import TRACE_SCHEMA, parse_point


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "zoprox.cli", *args],
        cwd=cwd, capture_output=True, text=True,
    )


@pytest.fixture
def outdir(tmp_path):
    return tmp_path


class TestRunCommand:
    def test_exact_quadratic_trace(self, outdir):
        res = run_cli(
            ["run", "--objective", "quadratic", "--C", "1", "--mu", "0", "--x0", "2",
             "--lambda", "1", "--delta", "1", "--exact", "--iters", "10", "--out", "."],
            outdir,
        )
        assert res.returncode == 0, res.stderr
        lines = (outdir / "trace.csv").read_text().strip().splitlines()
        assert lines[0] == ",".join(TRACE_SCHEMA)
        xs = [parse_point(line.split(",")[1])[0] for line in lines[1:]]
        assert xs[:3] == pytest.approx([2.0, 1.0, 0.5], abs=1e-14)
        sidecar = json.loads((outdir / "trace.json").read_text())
        assert sidecar["schema_version"] == 1
        assert sidecar["summary"]["terminated_by"] in ("max_iter", "step_tol")

    def test_invalid_objective_exit_2(self, outdir):
        res = run_cli(
            ["run", "--objective", "bogus", "--x0", "2", "--lambda", "1",
             "--delta", "1", "--exact", "--iters", "3"],
            outdir,
        )
        assert res.returncode == 2
        assert "abs" in res.stderr and "wiggly1d" in res.stderr

    def test_missing_lambda_exit_2(self, outdir):
        res = run_cli(
            ["run", "--objective", "abs", "--x0", "2", "--delta", "1",
             "--exact", "--iters", "3"],
            outdir,
        )
        assert res.returncode == 2

    def test_config_roundtrip_byte_identical(self, outdir):
        res = run_cli(
            ["run", "--objective", "wiggly1d", "--x0", "3", "--delta", "1",
             "--sampled", "--n", "200", "--iters", "20",
             "--lambda-schedule", "geometric:10:0.01:10", "--seed", "5",
             "--out", ".", "--tag", "first"],
            outdir,
        )
        assert res.returncode == 0, res.stderr
        echo = json.loads((outdir / "first.json").read_text())["config_echo"]
        (outdir / "replay_config.json").write_text(json.dumps(echo))
        res2 = run_cli(
            ["run", "--config", "replay_config.json", "--tag", "second", "--out", "."],
            outdir,
        )
        assert res2.returncode == 0, res2.stderr
        assert (outdir / "first.csv").read_bytes() == (outdir / "second.csv").read_bytes()

    def test_sampled_columns_filled(self, outdir):
        res = run_cli(
            ["run", "--objective", "abs", "--x0", "2", "--lambda", "1", "--delta", "1",
             "--sampled", "--n", "100", "--iters", "5", "--seed", "1", "--out", "."],
            outdir,
        )
        assert res.returncode == 0, res.stderr
        lines = (outdir / "trace.csv").read_text().strip().splitlines()
        header = lines[0].split(",")
        row = dict(zip(header, lines[1].split(",")))
        assert row["ess"] != "" and row["n_samples"] == "100"
        assert row["env_value"] == ""


class TestFigureCommand:
    def test_fig1c_small(self, outdir):
        res = run_cli(
            ["figure", "fig1c", "--trials", "3", "--n", "100", "--delta-points", "5",
             "--seed", "0", "--out", "."],
            outdir,
        )
        assert res.returncode == 0, res.stderr
        lines = (outdir / "fig1c.csv").read_text().strip().splitlines()
        assert lines[0] == "delta,prox,zprox_exact,szopo_mean,ess_mean"
        assert len(lines) == 6
        meta = json.loads((outdir / "fig1c.json").read_text())
        assert meta["files"] == {"fig1c": "fig1c.csv"}
        assert "config_hash" in meta

    def test_fig1c_deterministic_rerun(self, outdir):
        args = ["figure", "fig1c", "--trials", "2", "--n", "50", "--delta-points", "4",
                "--seed", "3", "--out", "."]
        assert run_cli(args, outdir).returncode == 0
        first = (outdir / "fig1c.csv").read_bytes()
        assert run_cli(args, outdir).returncode == 0
        assert (outdir / "fig1c.csv").read_bytes() == first

    def test_fig5_small_grid(self, outdir):
        # abs + quadratic go through closed forms, keep the grid tiny
        res = run_cli(["figure", "fig5", "--out", "."], outdir)
        assert res.returncode == 0, res.stderr
        lines = (outdir / "fig5.csv").read_text().strip().splitlines()
        assert lines[0] == "objective,lambda,x,env_value,f"
        assert len(lines) == 1 + 3 * 5 * 201


class TestBoundsCommand:
    def test_kappa_osc_threshold(self, outdir):
        res = run_cli(
            ["bounds", "--objective", "wiggly1d", "--lambda", "1", "--delta", "1",
             "--out", "."],
            outdir,
        )
        assert res.returncode == 0, res.stderr
        payload = json.loads((outdir / "bounds.json").read_text())
        names = {r["name"]: r for r in payload["reports"]}
        assert names["convexification_threshold_kappa_osc"]["bound"] == pytest.approx(31.809, abs=0.001)

    def test_requested_case_lambda_too_large_exit_2(self, outdir):
        res = run_cli(
            ["bounds", "--objective", "quadratic", "--C", "1", "--lambda", "2",
             "--delta", "1", "--case", "smooth"],
            outdir,
        )
        assert res.returncode == 2
        assert "lambda" in res.stderr.lower()

    def test_missing_constants_exit_2(self, outdir):
        res = run_cli(
            ["bounds", "--objective", "rastrigin10", "--lambda", "0.5", "--delta", "1",
             "--case", "smooth"],
            outdir,
        )
        assert res.returncode == 2
        assert "L" in res.stderr

    def test_trace_dominance_satisfied(self, outdir):
        res = run_cli(
            ["run", "--objective", "quadratic", "--C", "1", "--mu", "0", "--x0", "3",
             "--lambda", "0.4", "--delta", "1", "--exact", "--iters", "15", "--out", "."],
            outdir,
        )
        assert res.returncode == 0, res.stderr
        res2 = run_cli(
            ["bounds", "--objective", "quadratic", "--C", "1", "--mu", "0",
             "--lambda", "0.4", "--delta", "1", "--trace", "trace.csv", "--out", "."],
            outdir,
        )
        assert res2.returncode == 0, res2.stderr
        payload = json.loads((outdir / "bounds.json").read_text())
        rows = payload["per_iteration"]
        assert len(rows) == 15
        assert all(row["satisfied"] for row in rows)

    def test_escape_and_stability_reports(self, outdir):
        res = run_cli(
            ["bounds", "--objective", "quadratic", "--C", "1", "--lambda", "1",
             "--delta", "1", "--dim", "4", "--alpha", "4", "--n", "1",
             "--z-lower", "0.5", "--eps", "0.25", "--out", "."],
            outdir,
        )
        assert res.returncode == 0, res.stderr
        payload = json.loads((outdir / "bounds.json").read_text())
        names = {r["name"]: r for r in payload["reports"]}
        assert names["escape_probability"]["bound"] == pytest.approx(np.exp(-2.25), rel=1e-10)
        assert names["normalization_stability"]["log_bound"] == pytest.approx(-0.125, rel=1e-10)


class TestOutdirEnv:
    def test_env_var_default(self, tmp_path, monkeypatch):
        target = tmp_path / "envout"
        res = subprocess.run(
            [sys.executable, "-m", "zoprox.cli", "run", "--objective", "abs",
             "--x0", "1", "--lambda", "1", "--delta", "1", "--exact", "--iters", "2"],
            cwd=tmp_path, capture_output=True, text=True,
            env={"ZOPROX_OUTDIR": str(target), "PATH": "/usr/bin:/bin", "PYTHONPATH": ""},
        )
        assert res.returncode == 0, res.stderr
        assert (target / "trace.csv").exists()
