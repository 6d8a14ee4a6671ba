import json
import math
import os

import numpy as np
import pytest

from hannay_fiber.cli import main
from hannay_fiber.polarization import read_trajectory_csv

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def _cfg(name):
    return os.path.join(CONFIG_DIR, name)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_simulate_fixed_point(tmp_path):
    out = tmp_path / "fp"
    assert main(["simulate", "--config", _cfg("simulate_fixed_point.yaml"), "--out", str(out)]) == 0
    data = read_trajectory_csv(out / "trajectory.csv")
    assert np.max(np.abs(data["sy"] - 1.0)) < 1e-10
    assert np.max(np.abs(data["sx"])) < 1e-10


def test_simulate_generic_drifts(tmp_path):
    out = tmp_path / "gen"
    assert main(["simulate", "--config", _cfg("simulate_generic.yaml"), "--out", str(out)]) == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["s0_drift"] < 1e-8 and diag["quadratic_drift"] < 1e-8
    data = read_trajectory_csv(out / "trajectory.csv")
    s2 = data["sx"] ** 2 + data["sy"] ** 2 + data["sz"] ** 2
    assert np.max(np.abs(s2 - 1.0)) < 1e-8
    assert np.ptp(data["inv2"]) < 1e-8


def test_malformed_config_exit_2_no_output(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.yaml", "version: 1\ncoefficients: {a: 1}\n")
    out = tmp_path / "never"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()
    assert "bad.yaml:2" in capsys.readouterr().err
    assert [p for p in os.listdir(tmp_path) if p.startswith(".tmp")] == []


def test_missing_config_exit_2(tmp_path):
    assert main(["emt", "--out", str(tmp_path / "x")]) == 2


def test_structure_violation_exit_2(tmp_path):
    cfg = _write(tmp_path, "s.yaml", "coefficients: {a: 1, b: 0.5, c: 0.3, d: 0.3}\n"
                 "initial: {stokes: [1, 0.6, 0, 0.8]}\nrequire_hamiltonian: true\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "s")]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    # a large linear gain on u_x overflows within the span
    cfg = _write(tmp_path, "gain.yaml", "coefficients: {a: 0, b: 0, c: 0, d: 0, xi_x: [0, -2000]}\n"
                 "initial: {ux: [0.6, 0], uy: [0.8, 0]}\nz_span: [0, 10]\n")
    out = tmp_path / "gain"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 3
    assert "z=" in capsys.readouterr().err
    assert not out.exists()


def test_singularity_exit_4(tmp_path, capsys):
    cfg = _write(tmp_path, "crit.yaml", "loop: {family: circle, center: [1, 0, 1], "
                 "e1: [1, 0, -1], e2: [0, 1, 0], radius: 1.2}\nmethods: [surface]\n")
    out = tmp_path / "crit"
    assert main(["hannay", "--config", cfg, "--out", str(out)]) == 4
    assert "critical set" in capsys.readouterr().err
    assert not out.exists()


def test_open_profile_exit_2(tmp_path):
    assert main(["design", "--config", _cfg("open_profile.yaml"), "--out",
                 str(tmp_path / "o")]) == 2


def test_hannay_beta_zero_and_probe(tmp_path):
    out = tmp_path / "bz"
    assert main(["hannay", "--config", _cfg("hannay_beta_zero.yaml"), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    for value in rep["gamma_H"].values():
        assert abs(value) < 1e-3
    assert (out / "hannay.csv").exists()
    out = tmp_path / "probe"
    assert main(["hannay", "--config", _cfg("hannay_probe.yaml"), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["probe"]["monotone"]
    lines = (out / "probe.csv").read_text().splitlines()
    assert lines[0] == "eps,gamma_H,error" and len(lines) == 5


def test_emt_sweep(tmp_path):
    out = tmp_path / "emt"
    assert main(["emt", "--config", _cfg("emt_silicon_silica.yaml"), "--out", str(out)]) == 0
    lines = (out / "emt.csv").read_text().splitlines()
    assert lines[0] == "f,eps_e,d_eps_d_eps1,chi_e,residual"
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert rows[0, 1] == pytest.approx(2.1, rel=1e-12)
    assert rows[-1, 1] == pytest.approx(12.0, rel=1e-12)
    assert np.all(np.diff(rows[:, 1]) > 0)
    assert np.all(rows[:, 4] < 1e-12)
    cfg = _write(tmp_path, "same.yaml", "eps1: 3\neps2: 3\nf: {start: 0, stop: 1, num: 11}\n")
    assert main(["emt", "--config", cfg, "--out", str(tmp_path / "same")]) == 0
    lines = (tmp_path / "same" / "emt.csv").read_text().splitlines()[1:]
    assert all(float(ln.split(",")[1]) == pytest.approx(3.0, rel=1e-12) for ln in lines)
    bad = _write(tmp_path, "bad.yaml", "eps1: 3\neps2: 3\nf: [1.5]\n")
    assert main(["emt", "--config", bad, "--out", str(tmp_path / "bad")]) == 2


def test_design_constant_profile(tmp_path):
    out = tmp_path / "const"
    assert main(["design", "--config", _cfg("constant_profile.yaml"), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["gamma_H"]["surface"] == 0.0
    assert abs(rep["gamma_H"]["adiabatic"]) < 1e-3
    assert rep["source"] == "profile"
    assert (out / "loop.csv").exists()
    assert sorted(os.listdir(out / "plots"))


def test_oracle(capsys):
    assert main(["oracle", "pancharatnam", "--vertices", "0,0,1;1,0,0;0,1,0"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["phase"] == pytest.approx(-math.pi / 4, abs=1e-12)
    assert main(["oracle", "berry", "--theta", str(math.pi / 3), "--sigma", "2"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["gamma_plus"] == pytest.approx(2 * math.pi * (1 - 2 / math.sqrt(13)))
    assert main(["oracle", "retarder", "--theta1", "0", "--theta2", str(math.pi / 4),
                 "--delta", str(math.pi / 2)]) == 0
    assert json.loads(capsys.readouterr().out)["phase"] == pytest.approx(math.pi / 4)
    assert main(["oracle", "weinberg", "--c1", "0.70710678118654757,0",
                 "--c2", "0.70710678118654757,0", "--coeffs", "0,0,1"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert (res["omega1"], res["omega2"]) == pytest.approx((-0.25, 0.75))
    assert main(["oracle", "solid-angle", "--vertices", "0,0,1;0,0,-1;1,0,0"]) == 2
    assert main(["oracle", "berry", "--theta", "1"]) == 2
