"""Acceptance criteria, one test each, with a PASS/FAIL summary line."""
import filecmp
import math
import os
import time
import warnings

import numpy as np

from hannay_fiber.cli import main
from hannay_fiber.effective_medium import (IsotropicCompositeSpec, UniaxialInclusionSpec,
                                           bruggeman_residual, chi3_effective_isotropic,
                                           emt_general_g, emt_isotropic, emt_uniaxial_aligned,
                                           uniaxial_residuals)
from hannay_fiber.errors import StructureViolationError
from hannay_fiber.fiber_designer import (ModeProfile, overlap_ratio, tabulate_gaussian,
                                         trapezoid_overlap)
from hannay_fiber.hannay import (adiabatic_hannay, hannay_line_integral,
                                 hannay_surface_integral, singularity_probe)
from hannay_fiber.loops import (circle_loop, critical_approach_loop, hyperbolic_cap_loop,
                                random_stable_loop)
from hannay_fiber.polarization import (PolarizationAmplitudes, TetragonalCoefficients,
                                       check_hamiltonian_structure, integrate, invariants,
                                       reduce_coefficients, stokes_rhs)
from hannay_fiber.reference_phases import (PolynomialHtilde, berry_phase_gyrotropic,
                                           pancharatnam_phase, pb_retarder_phase,
                                           principal_value, weinberg_frequencies,
                                           weinberg_population, weinberg_two_state,
                                           weinberg_two_state_ode)

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def _random_integrable(rng):
    a, b, c = rng.uniform(-1, 1, size=3)
    return TetragonalCoefficients(a, b, c, -c)


def _random_amplitudes(rng):
    u = rng.normal(size=2) + 1j * rng.normal(size=2)
    return PolarizationAmplitudes(*(u / np.linalg.norm(u)))


def test_c01_conservation(acceptance_log):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    s0_worst = quad_worst = 0.0
    for _ in range(50):
        coeffs = _random_integrable(rng)
        traj = integrate(_random_amplitudes(rng), coeffs, (0.0, 100.0))
        rep = invariants(traj, reduce_coefficients(coeffs))
        s0_worst = max(s0_worst, rep.s0_drift)
        quad_worst = max(quad_worst, rep.quad_drift)
    elapsed = time.perf_counter() - t0
    ok = s0_worst < 1e-8 and quad_worst < 1e-8 and elapsed < 30
    acceptance_log(1, "conservation", ok,
                   f"max S0^2 drift {s0_worst:.2e}, max quadratic drift {quad_worst:.2e} "
                   "(tol 1e-8)", elapsed, 30)
    assert ok


def test_c02_hamiltonian_structure(acceptance_log):
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        res = check_hamiltonian_structure(_random_integrable(rng), [_random_amplitudes(rng)])
        worst = max(worst, res.max_residual)
    rejected = 0
    for _ in range(100):
        c, d = rng.uniform(-1, 1, size=2)
        if abs(d + c) < 1e-3:
            d += 0.5
        try:
            check_hamiltonian_structure(TetragonalCoefficients(0.3, 0.2, c, d),
                                        [_random_amplitudes(rng)])
        except StructureViolationError:
            rejected += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and rejected == 100 and elapsed < 5
    acceptance_log(2, "Hamiltonian structure", ok,
                   f"max relative residual {worst:.2e} (tol 1e-6), "
                   f"d != -c rejected {rejected}/100", elapsed, 5)
    assert ok


def test_c03_fixed_points(acceptance_log):
    rng = np.random.default_rng(103)
    t0 = time.perf_counter()
    nonzero = 0
    for _ in range(1000):
        rc = reduce_coefficients(TetragonalCoefficients(*rng.normal(scale=10.0, size=4)))
        for sy in (1.0, -1.0):
            if np.any(stokes_rhs((1.0, 0.0, sy, 0.0), rc) != 0.0):
                nonzero += 1
    elapsed = time.perf_counter() - t0
    ok = nonzero == 0 and elapsed < 1
    acceptance_log(3, "fixed points (0, +-1, 0)", ok,
                   f"{nonzero} of 2000 evaluations not exactly zero", elapsed, 1)
    assert ok


def _hannay_cases():
    rng = np.random.default_rng(104)
    cases = [(f"cap chi={chi}", hyperbolic_cap_loop(1.0, chi)) for chi in (0.25, 0.5, 1.0)]
    cases += [(f"random loop {i}", random_stable_loop(rng, min_disc=0.25)) for i in range(2)]
    return cases


def test_c04_hannay_cross_validation(acceptance_log):
    t0 = time.perf_counter()
    lines = []
    ok = True
    for name, loop in _hannay_cases():
        assert loop.min_discriminant >= 0.25
        surface = hannay_surface_integral(loop).value
        line = hannay_line_integral(loop).value
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            adia = adiabatic_hannay(loop)
        errors = np.abs(adia.raw_delta_theta - surface)
        sl = abs(surface - line)
        ad = abs(adia.delta_theta - surface)
        band = max(0.02 * abs(surface), 1e-3)
        decreasing = bool(errors[0] > errors[1] > errors[2])
        good = sl <= 1e-6 and ad <= band and decreasing
        ok &= good
        lines.append(f"{name}: |S-L| {sl:.1e}, |A-S| {ad:.1e} <= {band:.1e}, "
                     f"errors {errors[0]:.1e}>{errors[1]:.1e}>{errors[2]:.1e} "
                     f"{'ok' if good else 'BAD'}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 600
    acceptance_log(4, "Hannay cross-validation", ok,
                   "tol |S-L| 1e-6, |A-S| max(2%, 1e-3 rad), decreasing L/2L/4L errors; "
                   + "; ".join(lines), elapsed, 600)
    assert ok


def test_c05_beta_zero_loop(acceptance_log):
    t0 = time.perf_counter()
    loop = circle_loop([2.0, 0.0, 2.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 0.5)
    surface = hannay_surface_integral(loop).value
    line = hannay_line_integral(loop).value
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        adia = adiabatic_hannay(loop).delta_theta
    elapsed = time.perf_counter() - t0
    ok = abs(surface) < 1e-9 and abs(line) < 1e-9 and abs(adia) < 1e-3 and elapsed < 120
    acceptance_log(5, "beta = 0 loop", ok,
                   f"|surface| {abs(surface):.1e}, |line| {abs(line):.1e} (tol 1e-9), "
                   f"|adiabatic| {abs(adia):.1e} (tol 1e-3)", elapsed, 120)
    assert ok


def test_c06_singularity_probe(acceptance_log):
    t0 = time.perf_counter()
    table = singularity_probe(lambda e: critical_approach_loop(e, 2.0), [1.0, 0.1, 0.01],
                              strict=False)
    mags = np.abs(table.gamma_h)
    elapsed = time.perf_counter() - t0
    increasing = bool(np.all(np.diff(mags) > 0))
    growth = mags[-1] / mags[0]
    ok = increasing and growth >= 10 and elapsed < 120
    acceptance_log(6, "singularity probe", ok,
                   f"|gamma_H| at eps 1, 0.1, 0.01 = {mags[0]:.4g}, {mags[1]:.4g}, "
                   f"{mags[2]:.4g}; strictly increasing {increasing}, growth {growth:.1f}x "
                   "(need >= 10x)", elapsed, 120)
    assert ok


def test_c07_emt_limits(acceptance_log):
    t0 = time.perf_counter()
    errs = {}
    residuals = []
    rng = np.random.default_rng(107)
    for _ in range(20):
        e1, e2 = rng.uniform(1.0, 15.0, size=2)
        f, chi = rng.uniform(0.05, 1.0), rng.uniform(0.5, 3.0)
        lo = emt_isotropic(IsotropicCompositeSpec(e1, e2, 0.0, chi))
        hi = emt_isotropic(IsotropicCompositeSpec(e1, e2, 1.0, chi))
        same = emt_isotropic(IsotropicCompositeSpec(e1, e1, f, chi))
        errs["f=0"] = max(errs.get("f=0", 0.0), abs(lo - e2) / e2)
        errs["f=1"] = max(errs.get("f=1", 0.0), abs(hi - e1) / e1)
        errs["eps1=eps2"] = max(errs.get("eps1=eps2", 0.0), abs(same - e1) / e1)
        chi_e = chi3_effective_isotropic(IsotropicCompositeSpec(e1, e1, f, chi))
        errs["chi_e"] = max(errs.get("chi_e", 0.0), abs(chi_e - f * chi) / (f * chi))
        residuals += [bruggeman_residual(lo, e1, e2, 0.0), bruggeman_residual(hi, e1, e2, 1.0),
                      bruggeman_residual(same, e1, e1, f)]
        uni = UniaxialInclusionSpec(e1, e1, 0.0, 0.0, f, e2)
        iso = emt_general_g(IsotropicCompositeSpec(e1, e2, f))
        got = emt_uniaxial_aligned(uni)
        errs["uniaxial"] = max(errs.get("uniaxial", 0.0),
                               max(abs(v - iso) / iso for v in got))
        residuals.extend(uniaxial_residuals(uni))
        residuals.append(bruggeman_residual(iso, e1, e2, f))
    elapsed = time.perf_counter() - t0
    worst_res = max(residuals)
    ok = (errs["f=0"] < 1e-12 and errs["f=1"] < 1e-12 and errs["eps1=eps2"] < 1e-12
          and errs["chi_e"] < 1e-8 and errs["uniaxial"] < 1e-12 and worst_res < 1e-12
          and elapsed < 1)
    acceptance_log(7, "EMT limits", ok,
                   f"f=0 {errs['f=0']:.1e}, f=1 {errs['f=1']:.1e}, "
                   f"eps1=eps2 {errs['eps1=eps2']:.1e}, uniaxial {errs['uniaxial']:.1e} "
                   f"(tol 1e-12); chi_e {errs['chi_e']:.1e} (tol 1e-8); "
                   f"max residual {worst_res:.1e} (tol 1e-12)", elapsed, 1)
    assert ok


def test_c08_reference_phases(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(108)
    zero = max(max(abs(v) for v in berry_phase_gyrotropic(0.0, s))
               for s in rng.uniform(0.1, 5.0, size=20))
    quarter = 0.0
    for s in rng.uniform(0.1, 5.0, size=20):
        plus, minus = berry_phase_gyrotropic(math.pi / 2, s)
        quarter = max(quarter, abs(plus - 2 * math.pi), abs(minus + 2 * math.pi))
    octant = abs(pancharatnam_phase([(0, 0, 1), (1, 0, 0), (0, 1, 0)]) + math.pi / 4)
    retarder = 0.0
    for t1, t2 in rng.uniform(-5.0, 5.0, size=(100, 2)):
        got = pb_retarder_phase(t1, t2, math.pi)
        retarder = max(retarder, abs(got - principal_value(2.0 * (t2 - t1))))
    elapsed = time.perf_counter() - t0
    ok = max(zero, quarter, octant, retarder) < 1e-12 and elapsed < 1
    acceptance_log(8, "reference phases", ok,
                   f"gamma(0) {zero:.1e}, gamma(pi/2) vs +-2pi {quarter:.1e}, "
                   f"octant vs -pi/4 {octant:.1e}, retarder(pi) {retarder:.1e} (tol 1e-12)",
                   elapsed, 1)
    assert ok


def test_c09_gaussian_overlap(acceptance_log):
    t0 = time.perf_counter()
    sizes = [9, 17, 33, 65, 129]
    errors = []
    for n in sizes:
        grid, h = tabulate_gaussian(1.0, 6.0, n)
        errors.append(abs(overlap_ratio(ModeProfile.tabulated(grid, h, 20.0, 1.5)) - 0.5)
                      if n == sizes[-1] else
                      abs(trapezoid_overlap(grid, h) - 0.5))
    # grid spacing halves between consecutive sizes
    orders = [math.log2(e0 / e1) for e0, e1 in zip(errors, errors[1:])
              if e0 > 1e-13 and e1 > 1e-13]
    orders += [math.inf for e0, e1 in zip(errors, errors[1:]) if e0 > 1e-13 >= e1]
    observed = min(orders)
    elapsed = time.perf_counter() - t0
    ok = errors[-1] < 1e-10 and observed >= 2 and elapsed < 10
    acceptance_log(9, "Gaussian overlap", ok,
                   f"finest error {errors[-1]:.1e} (tol 1e-10), errors "
                   + ", ".join(f"{e:.1e}" for e in errors)
                   + f", observed order {observed:.2f} (need >= 2)", elapsed, 10)
    assert ok


def test_c10_weinberg(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(110)
    t = np.linspace(0.0, 100.0, 201)
    worst = drift = 0.0
    for _ in range(20):
        c1, c2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        h = PolynomialHtilde(rng.uniform(-1.0, 1.0, size=3))
        exact = weinberg_two_state(c1, c2, h, t)
        num = weinberg_two_state_ode(c1, c2, h, t)
        worst = max(worst, float(np.max(np.abs(exact - num))))
        drift = max(drift, float(np.ptp(weinberg_population(num))))
    spread = 0.0
    for _ in range(10):
        h = PolynomialHtilde(rng.uniform(-2.0, 2.0, size=2))
        freqs = np.array([weinberg_frequencies(h, p) for p in np.linspace(0.0, 1.0, 51)])
        spread = max(spread, float(np.ptp(freqs, axis=0).max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and drift < 1e-10 and spread < 1e-10 and elapsed < 10
    acceptance_log(10, "Weinberg two-state", ok,
                   f"closed form vs ODE {worst:.1e} (tol 1e-9), p drift {drift:.1e} "
                   f"(tol 1e-10), linear-H frequency spread {spread:.1e} (tol 1e-10)",
                   elapsed, 10)
    assert ok


def _tree_identical(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    if mismatch or errors:
        return False
    return all(_tree_identical(os.path.join(a, d), os.path.join(b, d)) for d in cmp.common_dirs)


def test_c11_determinism(acceptance_log, tmp_path):
    t0 = time.perf_counter()
    cfg = os.path.join(CONFIG_DIR, "reference_profile.yaml")
    codes = [main(["design", "--config", cfg, "--out", str(tmp_path / name)])
             for name in ("run1", "run2")]
    same = codes == [0, 0] and _tree_identical(tmp_path / "run1", tmp_path / "run2")
    n_files = sum(len(files) for _, _, files in os.walk(tmp_path / "run1"))
    elapsed = time.perf_counter() - t0
    ok = same and n_files > 0 and elapsed < 300
    acceptance_log(11, "determinism", ok,
                   f"exit codes {codes}, {n_files} files, byte-identical {same}", elapsed, 300)
    assert ok
