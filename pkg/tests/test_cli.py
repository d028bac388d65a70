"""
End-to-end tests of the command-line front end and its exit codes.
"""

import json
import math
import os

import numpy as np
import pytest

from strichartz.cli import main
from strichartz.dmnls import single_mode_rotation
from strichartz.models import FourierVector, PeriodicField


def write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def outputs_in(directory):
    return {p.name for p in directory.iterdir() if p.name != "logs"}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


@pytest.fixture
def unit_mode(workdir):
    return write(workdir / "mode.json", FourierVector(0, [1.0 / math.sqrt(2 * math.pi)]).to_dict())


class TestEval:
    def test_single_mode(self, capsys, unit_mode):
        code, report = run(capsys, "eval", unit_mode, "--B", "1")
        assert code == 0
        assert report["W"] == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)
        assert set(report["decomposition"]) == {"mass_term", "ell4_term", "d_term", "total"}
        assert report["A"] == pytest.approx(-1.0 / (4.0 * math.pi**2))

    def test_two_modes(self, capsys, workdir):
        c = 1.0 / (2.0 * math.sqrt(math.pi))
        path = write(workdir / "two.json", FourierVector(0, [c, c]).to_dict())
        code, report = run(capsys, "eval", path, "--B", "1", "--verify")
        assert code == 0
        assert report["W"] == pytest.approx(3.0 / (4.0 * math.pi), rel=1e-13)
        assert report["W_quadrature"] == pytest.approx(report["W"], rel=1e-8)

    def test_zero_vector(self, capsys, workdir):
        path = write(workdir / "zero.json", {"n_min": 0, "coeffs": [[0, 0], [0, 0]]})
        assert main(["eval", path, "--B", "1"]) == 2

    def test_malformed_inputs(self, capsys, workdir):
        assert main(["eval", write(workdir / "bad.json", {"coeffs": 3}), "--B", "1"]) == 2
        (workdir / "junk.json").write_text("not json")
        assert main(["eval", str(workdir / "junk.json"), "--B", "1"]) == 2
        assert main(["eval", str(workdir / "missing.json"), "--B", "1"]) == 2
        assert main(["eval", str(workdir / "junk.json"), "--B", "-1"]) == 2

    def test_writes_output_with_manifest(self, capsys, unit_mode, workdir):
        out = workdir / "out" / "eval.json"
        assert main(["eval", unit_mode, "--B", "2", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["B"] == 2.0
        manifest = json.loads((workdir / "out" / "eval.manifest.json").read_text())
        assert manifest["command"].startswith("strichartz eval")
        assert manifest["config"]["arguments"]["B"] == 2.0
        assert manifest["created_at"]

    def test_bad_settings_file(self, capsys, unit_mode, workdir):
        (workdir / "settings.json").write_text("[1, 2]")
        assert main(["eval", unit_mode, "--B", "1"]) == 2

    def test_unknown_command(self, capsys, workdir):
        assert main(["frobnicate"]) == 2


class TestOptimize:
    def test_existence_and_determinism(self, capsys, workdir):
        args = ["optimize", "--B", "1", "--halfwidth", "2", "--restarts", "3", "--seed", "4"]
        code, report = run(capsys, *args, "--out", "a.json")
        assert code == 0
        assert report["value"] > 1.0 / math.pi
        assert run(capsys, *args, "--out", "b.json")[0] == 0
        assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()
        assert (workdir / "a.trace.csv").read_text().startswith("iteration,value")
        manifest = json.loads((workdir / "a.manifest.json").read_text())
        assert manifest["outputs"] == ["a.json", "a.trace.csv"]

    def test_nonexistence_value(self, capsys, workdir):
        code, report = run(capsys, "optimize", "--B", str(math.pi), "--restarts", "2")
        assert code == 0
        assert report["value"] < 1.0
        assert list(workdir.glob("results/optimize_B*.json"))

    def test_canonical_argmax(self, capsys, workdir):
        code, report = run(capsys, "optimize", "--B", "0.8", "--halfwidth", "1", "--restarts", "2")
        argmax = FourierVector.from_dict(report["argmax"])
        anchor = argmax.coefficient(0)
        assert anchor.real > 0 and anchor.imag == pytest.approx(0.0, abs=1e-15)


class TestSimulate:
    def test_single_mode(self, capsys, workdir):
        u0 = PeriodicField(2 * math.pi, FourierVector(1, [0.3 + 0.2j]))
        path = write(workdir / "init.json", u0.to_dict())
        code, report = run(
            capsys, "simulate", path, "--dt", "0.01", "--horizon", "1", "--out", "traj.csv",
            "--snapshot-stride", "50",
        )
        assert code == 0
        assert report["drift"]["P"] <= 1e-6
        final = PeriodicField.from_dict(json.loads((workdir / "traj.final.json").read_text()))
        np.testing.assert_allclose(
            final.coeffs.coeffs, single_mode_rotation(u0, 1.0).coeffs.coeffs, atol=1e-6
        )
        header = (workdir / "traj.csv").read_text().splitlines()[0]
        assert header == "t,H,P,orbit_distance"
        assert (workdir / "traj" / "state_00000.json").exists()
        outputs = json.loads((workdir / "traj.manifest.json").read_text())["outputs"]
        assert outputs[:2] == ["traj.csv", "traj.final.json"]
        assert os.path.join("traj", "state_00000.json") in outputs
        assert os.path.join("traj", "state_00100.json") in outputs

    def test_bare_coefficients_need_period(self, capsys, workdir):
        path = write(workdir / "c.json", FourierVector(0, [0.1]).to_dict())
        assert main(["simulate", path, "--horizon", "0.1"]) == 2
        assert main(["simulate", path, "--L", "3", "--dt", "0.05", "--horizon", "0.1"]) == 0

    def test_strict_conservation(self, capsys, workdir):
        u0 = PeriodicField(2 * math.pi, FourierVector(-1, [10.0, 8.0j, -9.0]))
        path = write(workdir / "big.json", u0.to_dict())
        strict = ["simulate", path, "--dt", "1", "--horizon", "5", "--out", "traj.csv"]
        assert main([*strict, "--strict"]) == 5
        assert outputs_in(workdir) == {"big.json"}
        assert main(strict) == 0
        assert outputs_in(workdir) == {"big.json", "traj.csv", "traj.final.json", "traj.manifest.json"}


class TestStability:
    def test_gate(self, capsys, workdir):
        u0 = PeriodicField(2 * math.pi, FourierVector(-1, [0.2, 0.5j, -0.3]))
        path = write(workdir / "notground.json", u0.to_dict())
        assert main(["stability", path, "--epsilon", "0.01", "--horizon", "1"]) == 6

    @pytest.mark.slow
    def test_pipeline_from_optimize_report(self, capsys, workdir):
        code, _ = run(capsys, "optimize", "--B", "1", "--restarts", "4", "--out", "gs.json")
        assert code == 0
        code, report = run(
            capsys, "stability", "gs.json", "--epsilon", "0", "--horizon", "2", "--out", "st.json"
        )
        assert code == 0
        assert report["max_drift"] <= 1e-6
        manifest = json.loads((workdir / "st.manifest.json").read_text())
        assert manifest["outputs"] == ["st.json", "st.trajectory.csv"]
        rows = (workdir / "st.trajectory.csv").read_text().splitlines()
        assert rows[0] == "t,H,P,orbit_distance"
        assert all(float(row.split(",")[3]) <= 1e-6 for row in rows[1:])


class TestThreshold:
    def test_family_one(self, capsys, workdir):
        code, report = run(capsys, "threshold", "--family", "1", "--scan-step", "0.05")
        assert code == 0
        assert report["threshold"] == pytest.approx(0.6958, abs=5e-4)
        assert report["closed_form"] == pytest.approx(0.6958, abs=5e-4)
        lines = (workdir / "results" / "threshold_family1.csv").read_text().splitlines()
        assert lines[0] == "B,family_id,max_A,param_1,param_2"
        assert len(lines) == 81

    def test_no_threshold_leaves_no_files(self, capsys, workdir):
        (workdir / "settings.json").write_text(json.dumps({"threshold": {"scan_max": 0.5}}))
        assert main(["threshold", "--family", "1", "--out", "sweep.csv"]) == 4
        assert outputs_in(workdir) == {"settings.json"}

    def test_scan_step_too_coarse(self, capsys, workdir):
        assert main(["threshold", "--family", "1", "--scan-step", "0.2"]) == 2

    def test_invalid_threads(self, capsys, workdir, monkeypatch):
        monkeypatch.setenv("STRICHARTZ_THREADS", "zero")
        assert main(["threshold", "--family", "1"]) == 2
