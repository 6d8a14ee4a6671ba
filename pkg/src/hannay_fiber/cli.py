"""Command-line front end.

Subcommands: ``simulate``, ``hannay``, ``emt``, ``design`` and ``oracle``.
Exit codes: 0 success, 2 configuration or input, 3 numerical, 4
singularity or geometry.  Output directories are written to a temporary
sibling and renamed into place only on success.
"""

import argparse
import json
import math
import os
import shutil
import sys
import tempfile

import numpy as np

from . import __version__
from .config import apply_overrides, config_tree, load_config
from .effective_medium import (SWEEP_COLUMNS, Chi3TensorTetragonal, IsotropicCompositeSpec,
                               UniaxialInclusionSpec, sweep_rows)
from .errors import ConfigError, HannayFiberError, InvalidInputError
from .fiber_designer import (ExperimentReport, ExperimentSettings, FiberProfile, ModeProfile,
                             ProfileSample, config_hash, profile_to_loop, run_experiment,
                             write_report, json_ready)
from .hannay import singularity_probe
from .loops import (circle_loop, critical_approach_loop, fourier_loop, hyperbolic_cap_loop,
                    node_loop, point_loop, random_stable_loop)
from .polarization import (PolarizationAmplitudes, StokesVector, TetragonalCoefficients,
                           check_hamiltonian_structure, integrate, invariants,
                           write_trajectory_csv)
from .reference_phases import (PolynomialHtilde, berry_phase_gyrotropic,
                               geodesic_polygon_solid_angle, pancharatnam_phase,
                               pb_retarder_phase, weinberg_frequencies, weinberg_two_state)

DEFAULT_RTOL = 1e-11
DEFAULT_ATOL = 1e-11
ADIABATIC_TOL = 1e-12


# ---------------------------------------------------------------------------
# Builders from configuration trees
# ---------------------------------------------------------------------------

def build_loop(lc, seed=None, probe=False):
    """ParameterLoop from a :class:`~hannay_fiber.config.LoopConfig`."""
    fam = lc.family
    if fam == "hyperbolic-cap":
        return hyperbolic_cap_loop(lc.omega, lc.chi, lc.surface or "analytic-cap")
    if fam == "circle":
        return circle_loop(lc.center, lc.e1, lc.e2, lc.radius, probe=probe)
    if fam == "critical-approach":
        return critical_approach_loop(lc.eps, lc.kappa, probe=probe)
    if fam == "fourier":
        return fourier_loop(lc.center, lc.cos, lc.sin, lc.surface or "planar-fan")
    if fam == "nodes":
        return node_loop(lc.nodes, lc.surface or "planar-fan", probe=probe)
    if fam == "point":
        return point_loop(lc.point)
    rng = np.random.default_rng(seed)
    return random_stable_loop(rng, lc.min_disc, lc.harmonics, lc.amplitude)


def build_mode(mc):
    if mc.kind == "gaussian":
        return ModeProfile.gaussian(mc.width, mc.k0, mc.beta0)
    return ModeProfile.tabulated(np.array(mc.grid, dtype=float), mc.spacing, mc.k0, mc.beta0)


def _material(mc, f=None):
    f = mc.f if f is None else f
    if mc.kind == "isotropic":
        return IsotropicCompositeSpec(mc.eps1, mc.eps2, f, 1.0, mc.g)
    return UniaxialInclusionSpec(mc.eps_perp, mc.eps_par, mc.theta, mc.phi, f,
                                 mc.eps_host, mc.g)


def _chi3(cc):
    return Chi3TensorTetragonal(**cc.model_dump())


def build_profile(pc):
    """FiberProfile from explicit samples or a two-knob sweep."""
    if pc.samples is not None:
        samples = [ProfileSample(s.z, _material(s.material), _chi3(s.chi3), s.psi)
                   for s in pc.samples]
        return FiberProfile(pc.length, samples, pc.closed)
    sw = pc.sweep
    chi = _chi3(sw.chi3)
    samples = []
    for k in range(sw.n):
        u = k / (sw.n - 1)
        z = pc.length * u
        f = sw.material.f + sw.f_amplitude * math.sin(2.0 * math.pi * u)
        psi = sw.psi_turns * 0.5 * math.pi * u
        samples.append(ProfileSample(z, _material(sw.material, f), chi, psi))
    return FiberProfile(pc.length, samples, pc.closed)


def _tolerances(cfg, rtol, atol):
    return (cfg.tolerances.rel if cfg.tolerances.rel is not None else rtol,
            cfg.tolerances.abs if cfg.tolerances.abs is not None else atol)


# ---------------------------------------------------------------------------
# Atomic output
# ---------------------------------------------------------------------------

class AtomicDir:
    """Context manager yielding a temporary directory renamed to ``path`` on success."""

    def __init__(self, path):
        self.path = os.path.abspath(path)

    def __enter__(self):
        parent = os.path.dirname(self.path)
        os.makedirs(parent, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".tmp-out-", dir=parent)
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.tmp, ignore_errors=True)
            return False
        if os.path.exists(self.path):
            shutil.rmtree(self.path)
        os.replace(self.tmp, self.path)
        return False


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(json_ready(data), fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg, args):
    cc = cfg.coefficients
    coeffs = TetragonalCoefficients(cc.a, cc.b, cc.c, cc.d, complex(*cc.xi_x), complex(*cc.xi_y))
    if cfg.require_hamiltonian:
        check_hamiltonian_structure(coeffs, [PolarizationAmplitudes(1.0, 0.0)])
    ini = cfg.initial
    if ini.stokes is not None:
        initial = StokesVector(*ini.stokes)
        if coeffs.xi_x or coeffs.xi_y:
            initial = PolarizationAmplitudes.from_stokes(initial)
    else:
        initial = PolarizationAmplitudes(complex(*ini.ux), complex(*ini.uy))
    rtol, atol = _tolerances(cfg, DEFAULT_RTOL, DEFAULT_ATOL)
    traj = integrate(initial, coeffs, cfg.z_span, samples=cfg.samples, rtol=rtol, atol=atol)
    diag = traj.diagnostics
    summary = {
        "version": __version__,
        "config_hash": config_hash(config_tree(cfg)),
        "form": traj.form,
        "rtol": rtol, "atol": atol,
        "nfev": diag.nfev, "n_steps": diag.n_steps,
        "max_sphere_drift": diag.max_sphere_drift,
        "integrable": coeffs.is_integrable,
    }
    if diag.n_steps > 0:
        steps = np.diff(diag.step_z)
        summary["step_min"] = float(steps.min())
        summary["step_max"] = float(steps.max())
    if coeffs.is_integrable:
        inv = invariants(traj)
        summary["s0_drift"] = inv.s0_drift
        summary["quadratic_drift"] = inv.quad_drift
    with AtomicDir(args.out) as tmp:
        write_trajectory_csv(traj, os.path.join(tmp, "trajectory.csv"))
        _write_json(os.path.join(tmp, "diagnostics.json"), summary)
    return summary


def _settings(cfg_methods, action, periods, pole, rtol, atol, probe, workers,
              project=False, simulate_length=100.0):
    return ExperimentSettings(methods=tuple(cfg_methods), pole=pole, project=project,
                              action=action, periods=periods, rtol=rtol, atol=atol,
                              simulate_length=simulate_length,
                              probe_kappa=probe.kappa if probe else 2.0,
                              probe_eps=tuple(probe.eps) if probe else (),
                              workers=workers)


def cmd_hannay(cfg, args):
    rtol, atol = _tolerances(cfg, ADIABATIC_TOL, ADIABATIC_TOL)
    st = _settings(cfg.methods, cfg.action, cfg.periods, cfg.pole, rtol, atol, cfg.probe,
                   args.threads)
    tree = config_tree(cfg)
    if cfg.loop is not None:
        loop = build_loop(cfg.loop, args.seed)
        report = run_experiment(loop, st)
    else:
        table = singularity_probe(lambda e: critical_approach_loop(e, cfg.probe.kappa),
                                  cfg.probe.eps, workers=args.threads, strict=False)
        probe = {"rows": table.rows(), "monotone": table.monotone, "growth": table.growth,
                 "exponent": table.exponent, "kappa": cfg.probe.kappa}
        report = ExperimentReport(summary=json_ready({"probe": probe}), loop_rows=[],
                                  tables={"probe": probe["rows"]})
    write_report(report, args.out, tree)
    return report.summary


def cmd_emt(cfg, args):
    if isinstance(cfg.f, list):
        f_values = [float(v) for v in cfg.f]
    else:
        f_values = np.linspace(cfg.f.start, cfg.f.stop, cfg.f.num).tolist()
    rows = sweep_rows(cfg.eps1, cfg.eps2, f_values, cfg.chi, cfg.g)
    with AtomicDir(args.out) as tmp:
        with open(os.path.join(tmp, "emt.csv"), "w") as fh:
            fh.write(",".join(SWEEP_COLUMNS) + "\n")
            for r in rows:
                fh.write(",".join(repr(float(v)) for v in r) + "\n")
        _write_json(os.path.join(tmp, "summary.json"),
                    {"version": __version__, "config_hash": config_hash(config_tree(cfg)),
                     "rows": len(rows), "max_residual": max(r[4] for r in rows)})
    return rows


def cmd_design(cfg, args):
    ex = cfg.experiment
    rtol, atol = _tolerances(cfg, ADIABATIC_TOL, ADIABATIC_TOL)
    st = _settings(ex.methods, ex.action, ex.periods, ex.pole, rtol, atol, ex.probe,
                   args.threads, project=ex.project, simulate_length=ex.simulate_length)
    if cfg.loop is not None:
        loop = build_loop(cfg.loop, args.seed)
        report = run_experiment(loop, st, metadata={"source": "synthetic"})
    else:
        profile = build_profile(cfg.profile)
        mode = build_mode(cfg.mode)
        loop, maps = profile_to_loop(profile, mode, pole=ex.pole, project=ex.project)
        report = run_experiment(loop, st, maps=maps,
                                metadata={"source": "profile",
                                          "fiber_length": profile.length,
                                          "n_samples": len(profile.samples)})
    write_report(report, args.out, config_tree(cfg))
    return report.summary


def _floats(text, n=None):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise InvalidInputError(f"expected {n} numbers, got {text!r}")
    return vals


def _vertices(text):
    out = []
    for chunk in text.split(";"):
        out.append(_floats(chunk, 3))
    return out


def cmd_oracle(args):
    f = args.formula
    if f == "solid-angle":
        v = _vertices(args.vertices)
        result = {"solid_angle": geodesic_polygon_solid_angle(v)}
    elif f == "pancharatnam":
        v = _vertices(args.vertices)
        result = {"phase": pancharatnam_phase(v),
                  "phase_raw": pancharatnam_phase(v, principal=False)}
    elif f == "berry":
        plus, minus = berry_phase_gyrotropic(args.theta, args.sigma)
        result = {"gamma_plus": plus, "gamma_minus": minus}
    elif f == "retarder":
        result = {"phase": pb_retarder_phase(args.theta1, args.theta2, args.delta)}
    elif f == "weinberg":
        c1 = complex(*_floats(args.c1, 2))
        c2 = complex(*_floats(args.c2, 2))
        h = PolynomialHtilde(tuple(_floats(args.coeffs)))
        psi = weinberg_two_state(c1, c2, h, args.t)
        n = abs(c1) ** 2 + abs(c2) ** 2
        w1, w2 = weinberg_frequencies(h, abs(c2) ** 2 / n)
        result = {"omega1": w1, "omega2": w2, "psi1": [psi[0].real, psi[0].imag],
                  "psi2": [psi[1].real, psi[1].imag]}
    else:
        raise InvalidInputError(f"unknown oracle {f!r}")
    text = json.dumps(json_ready(result), sort_keys=True)
    print(text)
    return result


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _global_flags(p):
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--out", default="out", help="output directory (replaced atomically)")
    p.add_argument("--tol-abs", type=float, default=None, help="absolute tolerance override")
    p.add_argument("--tol-rel", type=float, default=None, help="relative tolerance override")
    p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for randomized sample generation (random loop family)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hannay-fiber",
        description="Hannay angles of nonlinear polarization dynamics in composite fibers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("simulate", "integrate the coupled-mode equations"),
                       ("hannay", "Hannay angle of a loop by all methods"),
                       ("emt", "effective-medium sweep over volume fraction"),
                       ("design", "full experiment from a fiber profile")):
        _global_flags(sub.add_parser(name, help=text))
    o = sub.add_parser("oracle", help="evaluate a closed-form reference phase")
    o.add_argument("formula", choices=("solid-angle", "pancharatnam", "berry", "retarder",
                                       "weinberg"))
    o.add_argument("--vertices", help="'x,y,z;x,y,z;...' polygon vertices")
    o.add_argument("--theta", type=float)
    o.add_argument("--sigma", type=float)
    o.add_argument("--theta1", type=float)
    o.add_argument("--theta2", type=float)
    o.add_argument("--delta", type=float)
    o.add_argument("--c1", help="'re,im'")
    o.add_argument("--c2", help="'re,im'")
    o.add_argument("--coeffs", help="polynomial coefficients of H(p), lowest order first")
    o.add_argument("--t", type=float, default=0.0)
    return parser


_REQUIRED = {"solid-angle": ("vertices",), "pancharatnam": ("vertices",),
             "berry": ("theta", "sigma"), "retarder": ("theta1", "theta2", "delta"),
             "weinberg": ("c1", "c2", "coeffs")}

COMMANDS = {"simulate": cmd_simulate, "hannay": cmd_hannay, "emt": cmd_emt,
            "design": cmd_design}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "oracle":
            missing = [k for k in _REQUIRED[args.formula] if getattr(args, k) is None]
            if missing:
                raise InvalidInputError(
                    f"oracle {args.formula} needs --{', --'.join(missing)}")
            cmd_oracle(args)
            return 0
        if args.config is None:
            raise ConfigError(f"{args.command} needs --config")
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.command, args.config)
        cfg = apply_overrides(cfg, args.tol_abs, args.tol_rel)
        COMMANDS[args.command](cfg, args)
    except HannayFiberError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
