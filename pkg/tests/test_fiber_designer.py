import json
import math
import os

import numpy as np
import pytest

from hannay_fiber.effective_medium import (Chi3TensorTetragonal, IsotropicCompositeSpec,
                                           UniaxialInclusionSpec)
from hannay_fiber.errors import (ClosureError, InvalidInputError, ResolutionError,
                                 SingularityError, StructureViolationError,
                                 TensorSymmetryError)
from hannay_fiber.fiber_designer import (ExperimentSettings, FiberProfile, ModeProfile,
                                         ProfileSample, coefficients_from_chi3, effective_chi3,
                                         nonlinearity_parameter, oscillator_params_from_coefficients,
                                         overlap_ratio, profile_to_loop, run_experiment,
                                         tabulate_gaussian, write_report)
from hannay_fiber.hannay import hannay_line_integral, hannay_surface_integral
from hannay_fiber.loops import hyperbolic_cap_loop, point_loop
from hannay_fiber.oscillator import OscillatorParams
from hannay_fiber.polarization import TetragonalCoefficients

CHI3 = Chi3TensorTetragonal(xxxx=1.0, xxyy=0.4, xyxy=0.4, xyyx=0.4, yyxy=-0.2, yxyy=-0.2,
                            xxxy=0.2, xyyy=-0.2)
MODE = ModeProfile.gaussian(1.0, 20.0, 1.5)


def _profile(n=65, f0=0.2, f_amp=0.0, turns=1, chi3=CHI3, closed=True, length=1.0):
    samples = []
    for u in np.linspace(0.0, 1.0, n):
        f = f0 + f_amp * math.sin(2 * math.pi * u)
        samples.append(ProfileSample(u * length, IsotropicCompositeSpec(12.0, 2.1, f), chi3,
                                     psi=turns * (math.pi / 2) * u))
    return FiberProfile(length, samples, closed=closed)


def test_gaussian_overlap_and_parameter():
    assert overlap_ratio(MODE) == 0.5
    mode = ModeProfile.gaussian(2.0, 1.0, 1.0)
    assert nonlinearity_parameter(1.0, mode) == pytest.approx(0.1875, rel=1e-15)
    assert nonlinearity_parameter(0.0, mode) == 0.0


def test_tabulated_overlap():
    grid, h = tabulate_gaussian(1.0, 6.0, 129)
    mode = ModeProfile.tabulated(grid, h, 1.0, 1.0)
    assert overlap_ratio(mode) == pytest.approx(0.5, abs=1e-10)
    coarse, hc = tabulate_gaussian(1.0, 6.0, 17)
    with pytest.raises(ResolutionError):
        overlap_ratio(ModeProfile.tabulated(coarse, hc, 1.0, 1.0))
    small, hs = tabulate_gaussian(1.0, 2.0, 129)
    with pytest.raises(ResolutionError):
        overlap_ratio(ModeProfile.tabulated(small, hs, 1.0, 1.0))
    even, he = tabulate_gaussian(1.0, 6.0, 128)
    with pytest.raises(ResolutionError):
        overlap_ratio(ModeProfile.tabulated(even / even.max(), he, 1.0, 1.0))


def test_mode_validation():
    with pytest.raises(InvalidInputError):
        ModeProfile.gaussian(-1.0, 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        ModeProfile.tabulated(np.ones((3, 4)), 0.1, 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        ModeProfile.tabulated(2 * np.ones((5, 5)), 0.1, 1.0, 1.0)


def test_coefficients_examples():
    res = coefficients_from_chi3(Chi3TensorTetragonal(xxxx=1.0))
    assert res.coefficients.as_tuple()[:4] == (1.0, 0.0, 0.0, 0.0)
    b = coefficients_from_chi3(Chi3TensorTetragonal(xxyy=1.0, xyxy=1.0, xyyx=1.0))
    assert b.coefficients.b == 1.0
    t = Chi3TensorTetragonal(yyxy=-0.3, yxyy=-0.3, xxxy=0.3, xyyy=-0.3)
    res = coefficients_from_chi3(t)
    assert (res.coefficients.c, res.coefficients.d) == pytest.approx((0.3, -0.3))
    assert not res.projected and res.coefficients.is_integrable


def test_coefficients_gate_and_projection():
    t = Chi3TensorTetragonal(xxxy=0.3, yyxy=-0.3, yxyy=-0.3, xyyy=-0.301)
    with pytest.raises(StructureViolationError):
        coefficients_from_chi3(t)
    res = coefficients_from_chi3(t, project=True)
    assert res.projected
    assert res.coefficients.c == pytest.approx(0.3005)
    assert res.coefficients.d == pytest.approx(-0.3005)
    far = Chi3TensorTetragonal(xxxy=0.3, yyxy=-0.3, yxyy=-0.3, xyyy=-0.5)
    with pytest.raises(StructureViolationError):
        coefficients_from_chi3(far, project=True)


def test_coefficients_symmetry_error():
    full = CHI3.full()
    full[1, 1, 1, 1] = 0.5
    with pytest.raises(TensorSymmetryError) as info:
        coefficients_from_chi3(full)
    assert info.value.relation == "yyyy = xxxx"


def test_oscillator_params_examples():
    p = oscillator_params_from_coefficients(TetragonalCoefficients(3, 1, 0.5, -0.5))
    assert p == OscillatorParams(2, 1, 2)
    crit = oscillator_params_from_coefficients(TetragonalCoefficients(1, 1, 0, 0))
    assert crit == OscillatorParams(2, 0, 0) and crit.stability == "critical"
    q = oscillator_params_from_coefficients(TetragonalCoefficients(2, 0.5, 0.1, -0.1))
    assert q.as_array() == pytest.approx([1, 0.2, 1.5], abs=1e-15)
    assert q.discriminant == pytest.approx(1.46, abs=1e-14)
    neg = oscillator_params_from_coefficients(TetragonalCoefficients(3, 1, 0.5, -0.5), "-y")
    assert neg == OscillatorParams(-2, -1, -2)
    with pytest.raises(StructureViolationError):
        oscillator_params_from_coefficients(TetragonalCoefficients(3, 1, 0.5, 0.5))


def test_round_trip_inverse_map():
    rng = np.random.default_rng(40)
    for _ in range(200):
        a, g = rng.uniform(0.1, 5, size=2) * rng.choice([-1, 1])
        b = rng.uniform(-0.99, 0.99) * math.sqrt(a * g)
        p = OscillatorParams(a, b, g)
        for pole in ("+y", "-y"):
            back = oscillator_params_from_coefficients(
                TetragonalCoefficients.from_oscillator(p, pole), pole)
            assert back.as_array() == pytest.approx(p.as_array(), rel=1e-14, abs=1e-14)


def test_profile_validation_and_closure():
    with pytest.raises(ClosureError):
        _profile(f_amp=0.0, turns=0, closed=False)
    samples = [ProfileSample(0.0, IsotropicCompositeSpec(12, 2.1, 0.2), CHI3),
               ProfileSample(1.0, IsotropicCompositeSpec(12, 2.1, 0.3), CHI3)]
    with pytest.raises(ClosureError):
        FiberProfile(1.0, samples, closed=True)
    open_profile = FiberProfile(1.0, samples, closed=False)
    with pytest.raises(ClosureError):
        profile_to_loop(open_profile, MODE)
    with pytest.raises(InvalidInputError):
        FiberProfile(1.0, samples[::-1], closed=False)
    with pytest.raises(InvalidInputError):
        FiberProfile(2.0, samples, closed=False)


def test_quarter_turn_closes_profile():
    # a pi/2 rotation maps the tetragonal tensor to itself
    prof = _profile(n=5, turns=1)
    assert prof.closed


def test_effective_chi3_isotropic_scaling():
    spec = IsotropicCompositeSpec(5.0, 5.0, 0.3)
    eff = effective_chi3(ProfileSample(0.0, spec, CHI3))
    assert eff.xxxx == pytest.approx(0.3, rel=1e-8)


def test_effective_chi3_uniaxial():
    z_aligned = UniaxialInclusionSpec(4.0, 6.0, 0.0, 0.0, 0.3, 2.0)
    eff = effective_chi3(ProfileSample(0.0, z_aligned, CHI3))
    assert eff.xxyy / eff.xxxx == pytest.approx(0.4, rel=1e-12)
    x_aligned = UniaxialInclusionSpec(4.0, 6.0, math.pi / 2, 0.0, 0.3, 2.0)
    with pytest.raises(TensorSymmetryError):
        effective_chi3(ProfileSample(0.0, x_aligned, CHI3))


def test_designed_loop_matches_closed_form():
    loop, maps = profile_to_loop(_profile(), MODE)
    x = np.array([m.params.as_array() for m in maps])
    trace = x[:, 0] + x[:, 2]
    disc = x[:, 0] * x[:, 2] - x[:, 1] ** 2
    # psi only turns the point about the alpha = gamma axis
    assert np.ptp(trace) < 1e-12 * trace[0]
    assert np.ptp(disc) < 1e-12 * disc[0]
    kappa, omega = trace[0] / 2, math.sqrt(disc[0])
    exact = math.pi * (kappa / omega - 1)
    s = hannay_surface_integral(loop).value
    assert abs(s) == pytest.approx(exact, rel=1e-5)
    assert hannay_line_integral(loop).value == pytest.approx(s, abs=1e-9)


def test_constant_profile_is_point_loop():
    loop, _ = profile_to_loop(_profile(n=9, turns=0), MODE)
    assert loop.path.describe()["kind"] == "point"
    assert hannay_surface_integral(loop).value == 0.0


def test_beta_zero_profile():
    chi3 = Chi3TensorTetragonal(xxxx=1.0, xxyy=0.4, xyxy=0.4, xyyx=0.4)
    loop, maps = profile_to_loop(_profile(n=33, f_amp=0.05, turns=0, chi3=chi3), MODE)
    assert all(m.params.beta == 0 for m in maps)
    assert hannay_surface_integral(loop).value == 0.0


def test_critical_profile_names_z_range():
    chi3 = Chi3TensorTetragonal(xxxx=1.0, xxyy=1.0, xyxy=1.0, xyyx=1.0)
    with pytest.raises(SingularityError) as info:
        profile_to_loop(_profile(n=9, turns=0, chi3=chi3), MODE)
    assert "z in [0.0, 1.0]" in str(info.value)


def test_run_experiment_synthetic_cap():
    loop = hyperbolic_cap_loop(1.0, 0.5)
    rep = run_experiment(loop, ExperimentSettings(probe_eps=(1.0, 0.1, 0.01)))
    g = rep.summary["gamma_H"]
    exact = math.pi * (math.cosh(0.5) - 1)
    for key in ("surface", "line", "adiabatic"):
        assert g[key] == pytest.approx(exact, rel=0.02)
    assert rep.summary["invariants"]["s0_drift"] < 1e-8
    assert rep.summary["probe"]["monotone"]
    assert set(rep.trajectories) == {"adiabatic_L1", "adiabatic_L2", "adiabatic_L4",
                                     "fixed_start"}
    row = rep.tables["hannay"][0]
    assert row["gamma_H_adiabatic_extrap"] == g["adiabatic"]


def test_write_report_layout_and_determinism(tmp_path):
    loop = point_loop([1.0, 0.2, 1.5])
    settings = ExperimentSettings(methods=("surface", "line"), simulate_length=5.0)
    rep = run_experiment(loop, settings)
    cfg = {"kind": "point"}
    a = write_report(rep, tmp_path / "a", cfg)
    b = write_report(run_experiment(loop, settings), tmp_path / "b", cfg)
    files = sorted(os.path.relpath(os.path.join(d, f), a)
                   for d, _, fs in os.walk(a) for f in fs)
    assert "report.json" in files and "loop.csv" in files and "hannay.csv" in files
    assert "trajectories/fixed_start.csv" in files
    assert any(f.startswith("plots/") for f in files)
    for f in files:
        with open(os.path.join(a, f), "rb") as fa, open(os.path.join(b, f), "rb") as fb:
            assert fa.read() == fb.read()
    with open(os.path.join(a, "report.json")) as fh:
        summary = json.load(fh)
    assert summary["gamma_H"]["surface"] == 0.0
    assert len(summary["config_hash"]) == 64
    leftovers = [p for p in os.listdir(tmp_path) if p.startswith(".tmp")]
    assert leftovers == []
