"""From a composite-fiber design to a Hannay-angle experiment.

A fiber profile lists, along z, the composite material, the crystallite
third-order susceptibility and the rotation ``psi`` of the crystallites
about the fiber axis.  Each sample maps to effective susceptibilities,
nonlinearity parameters, coupling coefficients and finally a point of
oscillator parameter space; the samples together trace a closed loop.

Rotating a tetragonal crystallite by ``psi`` turns ``(alpha - gamma, 2 beta)``
by ``4 psi`` at fixed ``alpha + gamma`` and discriminant, while the volume
fraction scales the whole point radially.
"""

import hashlib
import json
import math
import os
import shutil
import tempfile
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import __version__
from .effective_medium import (Chi3TensorTetragonal, IsotropicCompositeSpec,
                               UniaxialInclusionSpec, chi3_effective_anisotropic,
                               checked_derivative, uniaxial_derivatives)
from .errors import (ChartError, ClosureError, InvalidInputError, ResolutionError,
                     SingularityError, StructureViolationError, TensorSymmetryError)
from .hannay import (adiabatic_hannay, default_sweep_length, hannay_line_integral,
                     hannay_surface_integral, singularity_probe)
from .loops import critical_approach_loop, discriminant, node_loop
from .oscillator import OscillatorParams
from .polarization import (StokesVector, TetragonalCoefficients, integrate, invariants,
                           write_trajectory_csv)

GAUSSIAN_OVERLAP_RATIO = 0.5
CLOSURE_TOL = 1e-10
PROJECTION_LIMIT = 0.01


# ---------------------------------------------------------------------------
# Mode overlap
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeProfile:
    """Transverse mode ``F(x, y)`` with its wavenumbers.

    ``kind`` is ``'gaussian'`` (``F = exp(-r^2 / w^2)``, needs ``width``) or
    ``'tabulated'`` (square peak-normalized ``grid`` with uniform ``spacing``).
    """

    kind: str
    k0: float
    beta0: float
    width: float = None
    grid: np.ndarray = field(default=None, repr=False, compare=False)
    spacing: float = None

    def __post_init__(self):
        for name in ("k0", "beta0"):
            v = getattr(self, name)
            if v is None or not (math.isfinite(float(v)) and float(v) > 0):
                raise InvalidInputError(f"{name} must be positive")
            object.__setattr__(self, name, float(v))
        if self.kind == "gaussian":
            if self.width is None or not float(self.width) > 0:
                raise InvalidInputError("gaussian mode needs a positive width")
            object.__setattr__(self, "width", float(self.width))
        elif self.kind == "tabulated":
            g = np.asarray(self.grid, dtype=float)
            if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 3:
                raise InvalidInputError("tabulated mode grid must be square (n x n, n >= 3)")
            if not np.all(np.isfinite(g)):
                raise InvalidInputError("tabulated mode grid must be finite")
            peak = np.max(np.abs(g))
            if abs(peak - 1.0) > 1e-12:
                raise InvalidInputError("tabulated mode grid must be peak-normalized to 1")
            if self.spacing is None or not float(self.spacing) > 0:
                raise InvalidInputError("tabulated mode needs a positive spacing")
            object.__setattr__(self, "grid", g)
            object.__setattr__(self, "spacing", float(self.spacing))
        else:
            raise InvalidInputError(f"unknown mode kind {self.kind!r}")

    @classmethod
    def gaussian(cls, width, k0, beta0):
        return cls("gaussian", k0, beta0, width=width)

    @classmethod
    def tabulated(cls, grid, spacing, k0, beta0):
        return cls("tabulated", k0, beta0, grid=grid, spacing=spacing)


def tabulate_gaussian(width, half_extent, n):
    """Gaussian ``exp(-r^2/w^2)`` on an ``n x n`` grid over ``[-half_extent, half_extent]^2``."""
    x = np.linspace(-half_extent, half_extent, n)
    r2 = x[:, None] ** 2 + x[None, :] ** 2
    return np.exp(-r2 / width ** 2), float(x[1] - x[0])


def trapezoid_overlap(grid, spacing):
    """``int |F|^4 / int |F|^2`` by the tensor-product trapezoid rule."""
    a2 = np.abs(grid) ** 2
    num = trapezoid(trapezoid(a2 * a2, dx=spacing), dx=spacing)
    den = trapezoid(trapezoid(a2, dx=spacing), dx=spacing)
    return float(num / den)


def overlap_ratio(mode, rtol=1e-10):
    """Overlap ratio ``int |F|^4 / int |F|^2`` of a mode.

    Tabulated grids are checked against every-other-point subsampling;
    the two estimates must agree to ``rtol``.

    Raises
    ------
    ResolutionError
        If the grid is too coarse, has an even point count (no nested
        subgrid) or does not contain the mode.
    """
    if mode.kind == "gaussian":
        return GAUSSIAN_OVERLAP_RATIO
    g = mode.grid
    n = g.shape[0]
    if n % 2 == 0 or n < 5:
        raise ResolutionError("tabulated grid needs an odd point count >= 5 for refinement")
    edge = max(np.abs(g[0]).max(), np.abs(g[-1]).max(), np.abs(g[:, 0]).max(),
               np.abs(g[:, -1]).max())
    if edge ** 2 > rtol:
        raise ResolutionError(f"mode not contained in the grid (edge amplitude {edge!r})")
    fine = trapezoid_overlap(g, mode.spacing)
    coarse = trapezoid_overlap(g[::2, ::2], 2.0 * mode.spacing)
    if abs(fine - coarse) > rtol * abs(fine):
        raise ResolutionError(
            f"overlap ratio not converged: {fine!r} vs half-grid {coarse!r}")
    return fine


def nonlinearity_parameter(chi_component, mode, rtol=1e-10):
    """``gamma = (3 k0^2 / (8 beta0)) chi (int |F|^4 / int |F|^2)``."""
    return 3.0 * mode.k0 ** 2 / (8.0 * mode.beta0) * float(chi_component) * \
        overlap_ratio(mode, rtol)


def nonlinearity_tensor(chi, mode, rtol=1e-10):
    """Apply :func:`nonlinearity_parameter` to every tetragonal component."""
    return chi.scaled(nonlinearity_parameter(1.0, mode, rtol))


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientResult:
    coefficients: TetragonalCoefficients
    violation: float
    projected: bool


def coefficients_from_chi3(gammas, project=False, limit=PROJECTION_LIMIT):
    """Coupling coefficients (a, b, c, d) from tetragonal nonlinearity parameters.

    ``a = g_xxxx``, ``b = (g_xxyy + g_xyxy + g_xyyx) / 3``,
    ``c = (g_xxyx + g_xyxx + g_xxxy) / 3`` and ``d = g_xyyy``.

    Parameters
    ----------
    gammas : Chi3TensorTetragonal or array_like
        Full tensors are validated against the tetragonal relations.
    project : bool
        Replace (c, d) by ``((c - d)/2, -(c - d)/2)`` when ``d != -c`` and the
        relative violation ``|c + d| / max(|c|, |d|)`` is below ``limit``.

    Raises
    ------
    TensorSymmetryError
        If a full tensor breaks a tetragonal relation.
    StructureViolationError
        If ``d != -c`` and no projection applies.
    """
    if not isinstance(gammas, Chi3TensorTetragonal):
        gammas = Chi3TensorTetragonal.from_full(gammas)
    t = gammas.full(2)
    a = t[0, 0, 0, 0]
    b = (t[0, 0, 1, 1] + t[0, 1, 0, 1] + t[0, 1, 1, 0]) / 3.0
    c = (t[0, 0, 1, 0] + t[0, 1, 0, 0] + t[0, 0, 0, 1]) / 3.0
    d = t[0, 1, 1, 1]
    scale = max(abs(c), abs(d))
    violation = abs(c + d) / scale if scale > 0 else 0.0
    if violation <= 1e-12:
        return CoefficientResult(TetragonalCoefficients(a, b, c, -c), violation, False)
    if project and violation <= limit:
        h = 0.5 * (c - d)
        return CoefficientResult(TetragonalCoefficients(a, b, h, -h), violation, True)
    raise StructureViolationError(
        f"tensor violates d = -c (c={c!r}, d={d!r}, relative violation {violation:.3g})",
        relation="d = -c")


def oscillator_params_from_coefficients(coeffs, pole="+y"):
    """``(alpha, beta, gamma) = (2b, 2c, a - b)`` at +y, negated at -y."""
    if not coeffs.is_integrable:
        raise StructureViolationError("coefficients violate d = -c or carry linear terms",
                                      relation="d = -c")
    p = OscillatorParams(2.0 * coeffs.b, 2.0 * coeffs.c, coeffs.a - coeffs.b)
    if pole == "+y":
        return p
    if pole == "-y":
        return p.negated()
    raise InvalidInputError(f"pole must be '+y' or '-y', got {pole!r}")


# ---------------------------------------------------------------------------
# Fiber profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileSample:
    """Material record at one z: composite, crystallite chi3 and rotation psi."""

    z: float
    material: object
    chi3: Chi3TensorTetragonal
    psi: float = 0.0

    def __post_init__(self):
        if not isinstance(self.material, (IsotropicCompositeSpec, UniaxialInclusionSpec)):
            raise InvalidInputError("material must be an isotropic or uniaxial composite spec")
        if not isinstance(self.chi3, Chi3TensorTetragonal):
            raise InvalidInputError("chi3 must be a Chi3TensorTetragonal")
        object.__setattr__(self, "z", float(self.z))
        object.__setattr__(self, "psi", float(self.psi))

    def crystal_tensor(self):
        return self.chi3.rotated(self.psi) if self.psi else self.chi3


def _material_vector(m):
    if isinstance(m, IsotropicCompositeSpec):
        return np.array([m.eps1, m.eps2, m.f, m.g])
    st, ct = math.sin(m.theta), math.cos(m.theta)
    axis = [st * math.cos(m.phi), st * math.sin(m.phi), ct]
    # the optic axis is a direction without sign
    if axis[2] < 0 or (axis[2] == 0 and axis[0] < 0):
        axis = [-v for v in axis]
    return np.array([m.eps_perp, m.eps_par, m.f, m.g, m.eps_host] + axis)


def _samples_match(s0, s1, tol=CLOSURE_TOL):
    if type(s0.material) is not type(s1.material):
        return False
    v0, v1 = _material_vector(s0.material), _material_vector(s1.material)
    scale = max(1.0, float(np.abs(v0).max()))
    if np.max(np.abs(v0 - v1)) > tol * scale:
        return False
    t0, t1 = s0.crystal_tensor().full(2), s1.crystal_tensor().full(2)
    tscale = max(1.0, float(np.abs(t0).max()))
    return bool(np.max(np.abs(t0 - t1)) <= tol * tscale)


@dataclass(frozen=True)
class FiberProfile:
    """Samples along ``z in [0, L]``; ``closed`` asserts sample(0) = sample(L)."""

    length: float
    samples: tuple
    closed: bool = True

    def __post_init__(self):
        L = float(self.length)
        if not (math.isfinite(L) and L > 0):
            raise InvalidInputError("fiber length must be positive")
        object.__setattr__(self, "length", L)
        samples = tuple(self.samples)
        if len(samples) < 2:
            raise InvalidInputError("a profile needs at least two samples")
        z = np.array([s.z for s in samples])
        if np.any(np.diff(z) <= 0):
            raise InvalidInputError("sample z values must be strictly increasing")
        if abs(z[0]) > 1e-12 * L or abs(z[-1] - L) > 1e-12 * L:
            raise InvalidInputError("samples must run from z = 0 to z = L")
        object.__setattr__(self, "samples", samples)
        match = _samples_match(samples[0], samples[-1])
        if bool(self.closed) != match:
            raise ClosureError(
                "closure flag disagrees with the endpoint data" if self.closed is False
                else "profile is not closed: sample(0) != sample(L) to 1e-10")
        object.__setattr__(self, "closed", bool(self.closed))

    @property
    def z(self):
        return np.array([s.z for s in self.samples])


def effective_chi3(sample):
    """Effective transverse chi3 tensor of one sample's composite."""
    m = sample.material
    crystal = sample.crystal_tensor()
    if isinstance(m, IsotropicCompositeSpec):
        if m.f == 0:
            return crystal.scaled(0.0)
        d = checked_derivative(m.eps1, m.eps2, m.f, m.g)
        return crystal.scaled(d * abs(d) / m.f)
    if m.f == 0:
        return crystal.scaled(0.0)
    res = chi3_effective_anisotropic(crystal, uniaxial_derivatives(m), m.f)
    if res.tetragonal is None:
        raise TensorSymmetryError(
            "effective tensor loses tetragonal symmetry "
            f"(broken: {', '.join(res.broken_relations) or 'complex factors'})",
            relation=res.broken_relations[0] if res.broken_relations else None)
    return res.tetragonal


@dataclass(frozen=True)
class SampleMap:
    z: float
    coefficients: TetragonalCoefficients
    params: OscillatorParams
    violation: float
    projected: bool


def map_sample(sample, mode, pole="+y", project=False):
    """Composite sample to oscillator parameters."""
    try:
        gam = nonlinearity_tensor(effective_chi3(sample), mode)
        cr = coefficients_from_chi3(gam, project=project)
        params = oscillator_params_from_coefficients(cr.coefficients, pole)
    except (StructureViolationError, InvalidInputError) as exc:
        raise type(exc)(f"at z = {sample.z!r}: {exc}") from exc
    return SampleMap(sample.z, cr.coefficients, params, cr.violation, cr.projected)


def _z_ranges(z, mask):
    out = []
    start = None
    for zi, m in zip(z, mask):
        if m and start is None:
            start = zi
            last = zi
        elif m:
            last = zi
        elif start is not None:
            out.append((start, last))
            start = None
    if start is not None:
        out.append((start, last))
    return out


def profile_to_loop(profile, mode, pole="+y", project=False, probe=False):
    """Parameter loop traced by a closed profile.

    Returns ``(loop, maps)``.  A profile whose samples all map to the same
    point yields a degenerate point loop.

    Raises
    ------
    ClosureError
        If the profile is open.
    SingularityError
        If samples or the fan surface reach the critical set; the message
        names the offending z range.
    """
    if not profile.closed:
        raise ClosureError("profile is open; a Hannay experiment needs a closed loop")
    maps = [map_sample(s, mode, pole, project) for s in profile.samples]
    nodes = np.array([m.params.as_array() for m in maps])
    nodes[-1] = nodes[0]
    z = [float(v) for v in profile.z]
    disc = discriminant(nodes.T)
    scale = np.max(np.abs(nodes), axis=1) ** 2
    bad = disc <= 1e-12 * np.maximum(scale, 1e-300)
    if np.any(bad) and not probe:
        ranges = ", ".join(f"[{a!r}, {b!r}]" for a, b in _z_ranges(z, bad))
        raise SingularityError(f"profile reaches the critical set for z in {ranges}",
                               discriminant=float(disc.min()), region=f"z in {ranges}")
    try:
        loop = node_loop(nodes, probe=probe, params=np.array(z) / profile.length)
    except SingularityError as exc:
        k = int(np.argmin(disc))
        raise SingularityError(
            f"spanning surface touches the critical set (nearest sample z = {z[k]!r})",
            discriminant=exc.discriminant, region=f"fan surface near z = {z[k]!r}") from exc
    return loop, maps


# ---------------------------------------------------------------------------
# Experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSettings:
    """Knobs of a full Hannay experiment."""

    methods: tuple = ("surface", "line", "adiabatic")
    pole: str = "+y"
    project: bool = False
    action: float = 1e-8
    periods: float = 16.0
    surface_tol: float = 1e-10
    line_tol: float = 1e-12
    rtol: float = 1e-12
    atol: float = 1e-12
    simulate_length: float = 100.0
    probe_kappa: float = 2.0
    probe_eps: tuple = ()
    workers: int = 1


@dataclass
class ExperimentReport:
    summary: dict
    loop_rows: list
    trajectories: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)


def json_ready(v):
    """Nested structure with numpy scalars converted and non-finite floats as strings."""
    if isinstance(v, dict):
        return {str(k): json_ready(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [json_ready(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def run_experiment(loop, settings=None, maps=None, metadata=None):
    """Hannay angle of ``loop`` by every requested method, with diagnostics.

    Parameters
    ----------
    loop : ParameterLoop
        From :func:`profile_to_loop` or a synthetic family.
    settings : ExperimentSettings
    maps : list of SampleMap, optional
        Per-sample data written to the loop table.
    metadata : dict, optional
        Extra entries recorded in the summary.
    """
    st = settings or ExperimentSettings()
    summary = {"loop": loop.describe(), "gamma_H": {}, "errors": {}}
    if metadata:
        summary.update(metadata)
    trajectories = {}

    if maps is not None:
        rows = [{"z": m.z, "alpha": m.params.alpha, "beta": m.params.beta,
                 "gamma": m.params.gamma, "discriminant": m.params.discriminant,
                 "a": m.coefficients.a, "b": m.coefficients.b, "c": m.coefficients.c,
                 "d": m.coefficients.d, "violation": m.violation,
                 "projected": int(m.projected)} for m in maps]
        summary["projected_samples"] = sum(int(m.projected) for m in maps)
        summary["max_violation"] = max(m.violation for m in maps)
    else:
        s = np.linspace(0.0, 1.0, 257)
        x = loop.path.points(s)
        rows = [{"s": float(si), "alpha": float(a), "beta": float(b), "gamma": float(g),
                 "discriminant": float(a * g - b * b)} for si, a, b, g in zip(s, *x)]

    if "surface" in st.methods:
        si = hannay_surface_integral(loop, tol=st.surface_tol, rtol=st.surface_tol)
        summary["gamma_H"]["surface"] = si.value
        summary["errors"]["surface"] = si.error
        summary["surface_triangles"] = si.n_triangles
    if "line" in st.methods:
        try:
            li = hannay_line_integral(loop, tol=st.line_tol)
            summary["gamma_H"]["line"] = li.value
            summary["errors"]["line"] = li.error
        except ChartError as exc:
            summary["gamma_H"]["line"] = None
            summary["errors"]["line"] = f"chart unavailable: {exc}"
    if "adiabatic" in st.methods:
        length = default_sweep_length(loop, st.periods)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ad = adiabatic_hannay(loop, length, st.action, pole=st.pole, rtol=st.rtol,
                                  atol=st.atol, workers=st.workers, keep_trajectory=True)
        summary["gamma_H"]["adiabatic"] = ad.delta_theta
        summary["adiabatic"] = {"table": ad.table(), "converged": ad.converged,
                                "lambda_shift": ad.lambda_shift,
                                "warnings": [str(w.message) for w in caught]}
        for k, run in enumerate(ad.runs):
            trajectories[f"adiabatic_L{2 ** k}"] = run.trajectory

    # fixed-coefficient run at the loop start: invariant drift diagnostics
    p0 = OscillatorParams(*loop.path.points(np.array([0.0]))[:, 0])
    coeffs = TetragonalCoefficients.from_oscillator(p0, st.pole)
    s_init = StokesVector(1.0, 0.3, 0.8, math.sqrt(1.0 - 0.09 - 0.64))
    traj = integrate(s_init, coeffs, (0.0, st.simulate_length), rtol=min(st.rtol * 10, 1e-11),
                     atol=min(st.atol * 10, 1e-11))
    inv = invariants(traj)
    summary["invariants"] = {"s0_drift": inv.s0_drift, "quadratic_drift": inv.quad_drift,
                             "length": st.simulate_length}
    trajectories["fixed_start"] = traj

    if st.probe_eps:
        table = singularity_probe(
            lambda e: critical_approach_loop(e, st.probe_kappa), st.probe_eps,
            tol=st.surface_tol, workers=st.workers, strict=False)
        summary["probe"] = {"rows": table.rows(), "monotone": table.monotone,
                            "growth": table.growth, "exponent": table.exponent,
                            "kappa": st.probe_kappa}
    nan = float("nan")
    g = summary["gamma_H"]
    raw = [r["delta_theta"] for r in summary["adiabatic"]["table"]] if "adiabatic" in summary \
        else [nan] * 3
    tables = {"hannay": [{
        "eps": loop.min_discriminant,
        "gamma_H_surface": g.get("surface", nan),
        "gamma_H_line": nan if g.get("line") is None else g["line"],
        "gamma_H_adiabatic_raw_L": raw[0],
        "gamma_H_adiabatic_raw_2L": raw[1],
        "gamma_H_adiabatic_raw_4L": raw[2],
        "gamma_H_adiabatic_extrap": g.get("adiabatic", nan),
    }]}
    if "probe" in summary:
        tables["probe"] = summary["probe"]["rows"]
    return ExperimentReport(summary=json_ready(summary), loop_rows=rows,
                            trajectories=trajectories, tables=tables)


def _write_csv(path, rows):
    cols = list(rows[0])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(repr(float(r[c])) if not isinstance(r[c], int) else str(r[c])
                              for c in cols) + "\n")


def _plot_scripts(trajectory_names, loop_columns, tables=()):
    scripts = {}
    if "probe" in tables:
        scripts["probe.script"] = (
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set logscale xy\nset xlabel 'eps'\nset ylabel '|gamma_H|'\n"
            "plot '../probe.csv' using 1:(abs($2)) with linespoints\n")
    if loop_columns:
        ia = loop_columns.index("alpha") + 1
        ib = loop_columns.index("beta") + 1
        ig = loop_columns.index("gamma") + 1
        scripts["loop.script"] = (
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set xlabel 'alpha'\nset ylabel 'beta'\nset zlabel 'gamma'\n"
            f"splot '../loop.csv' using {ia}:{ib}:{ig} with lines\n")
        scripts["loop_params.script"] = (
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            f"set xlabel '{loop_columns[0]}'\n"
            f"plot '../loop.csv' using 1:{ia} with lines, '' using 1:{ib} with lines, "
            f"'' using 1:{ig} with lines\n")
    for name in trajectory_names:
        scripts[f"{name}.script"] = (
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set xlabel 'z'\n"
            f"plot '../trajectories/{name}.csv' using 1:7 with lines, "
            "'' using 1:8 with lines, '' using 1:9 with lines\n")
    return scripts


def config_hash(config):
    """SHA-256 of the canonical JSON form of a configuration tree."""
    text = json.dumps(json_ready(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def write_report(report, out_dir, config=None):
    """Write a report directory atomically (temporary directory, then rename).

    Layout: ``report.json``, ``loop.csv``, ``trajectories/*.csv`` and
    ``plots/*.script``.  Nothing time-dependent is written.
    """
    out_dir = os.path.abspath(out_dir)
    parent = os.path.dirname(out_dir)
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".tmp-report-", dir=parent)
    try:
        summary = dict(report.summary)
        summary["version"] = __version__
        if config is not None:
            summary["config_hash"] = config_hash(config)
        with open(os.path.join(tmp, "report.json"), "w") as fh:
            json.dump(summary, fh, sort_keys=True, indent=2)
            fh.write("\n")
        if report.loop_rows:
            _write_csv(os.path.join(tmp, "loop.csv"), report.loop_rows)
        for name, rows in sorted(report.tables.items()):
            _write_csv(os.path.join(tmp, f"{name}.csv"), rows)
        os.makedirs(os.path.join(tmp, "trajectories"))
        names = sorted(report.trajectories)
        for name in names:
            write_trajectory_csv(report.trajectories[name],
                                 os.path.join(tmp, "trajectories", f"{name}.csv"))
        os.makedirs(os.path.join(tmp, "plots"))
        cols = list(report.loop_rows[0]) if report.loop_rows else []
        for fname, text in sorted(_plot_scripts(names, cols, report.tables).items()):
            with open(os.path.join(tmp, "plots", fname), "w") as fh:
                fh.write(text)
        if os.path.exists(out_dir):
            shutil.rmtree(out_dir)
        os.replace(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out_dir
