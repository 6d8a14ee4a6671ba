"""Polarization dynamics in amplitude and Stokes form.

The coupled-mode equations for the slowly varying envelopes read::

    i du_j/dz = -xi_j/2 u_j - a |u_j|^2 u_j - b (2|u_k|^2 u_j + u_k^2 u_j*)
                -/+ c (2|u_j|^2 u_k + u_j^2 u_k*) -/+ d |u_k|^2 u_k

with the upper sign for j = x and the lower sign for j = y.  When d = -c
and xi = 0 they derive from the Hamiltonian::

    H = -1/2 (c0 S0^2 + cz Sz^2 + 2 c Sz Sx + cx Sx^2)

with c0 = (a+b)/2, cz = (a-b)/2, cx = b.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (DivergenceError, InvalidInputError, PhaseUndefinedError,
                     ResolutionError, StiffnessError, StructureViolationError)
from .oscillator import OscillatorParams

INTEGRABILITY_RTOL = 1e-12


def _finite_real(name, v):
    if isinstance(v, complex) or np.iscomplexobj(v):
        raise InvalidInputError(f"{name} must be real, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise InvalidInputError(f"{name} must be finite, got {v!r}")
    return v


def _finite_complex(name, v):
    v = complex(v)
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise InvalidInputError(f"{name} must be finite, got {v!r}")
    return v


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarizationAmplitudes:
    """Complex envelopes ``(u_x, u_y)`` with nonzero norm."""

    ux: complex
    uy: complex

    def __post_init__(self):
        ux = _finite_complex("ux", self.ux)
        uy = _finite_complex("uy", self.uy)
        if abs(ux) ** 2 + abs(uy) ** 2 <= 0.0:
            raise InvalidInputError("amplitude norm must be strictly positive")
        object.__setattr__(self, "ux", ux)
        object.__setattr__(self, "uy", uy)

    @property
    def norm2(self):
        return abs(self.ux) ** 2 + abs(self.uy) ** 2

    def as_array(self):
        return np.array([self.ux, self.uy], dtype=complex)

    @classmethod
    def from_stokes(cls, s):
        """Amplitudes with ``arg u_x = 0`` reproducing the Stokes vector."""
        s0 = s.s0
        ux = math.sqrt(max(0.0, (s0 + s.sz) / 2.0))
        rho = math.sqrt(max(0.0, (s0 - s.sz) / 2.0))
        delta = math.atan2(s.sy, s.sx) if (s.sx or s.sy) else 0.0
        return cls(ux, rho * complex(math.cos(delta), math.sin(delta)))


@dataclass(frozen=True)
class StokesVector:
    s0: float
    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        for name in ("s0", "sx", "sy", "sz"):
            object.__setattr__(self, name, _finite_real(name, getattr(self, name)))
        if self.s0 <= 0:
            raise InvalidInputError(f"s0 must be positive, got {self.s0!r}")

    def as_array(self):
        return np.array([self.s0, self.sx, self.sy, self.sz])

    @classmethod
    def from_array(cls, arr):
        return cls(*(float(v) for v in arr))


@dataclass(frozen=True)
class TetragonalCoefficients:
    """Nonlinear coupling coefficients (a, b, c, d) and linear terms xi."""

    a: float
    b: float
    c: float
    d: float
    xi_x: complex = 0j
    xi_y: complex = 0j

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, _finite_real(name, getattr(self, name)))
        for name in ("xi_x", "xi_y"):
            object.__setattr__(self, name, _finite_complex(name, getattr(self, name)))

    @property
    def integrability_violation(self):
        return abs(self.d + self.c)

    @property
    def is_integrable(self):
        """True iff d = -c within the gate and xi vanishes."""
        return (self.integrability_violation <= INTEGRABILITY_RTOL * max(1.0, abs(self.c))
                and self.xi_x == 0 and self.xi_y == 0)

    def reduced(self):
        return reduce_coefficients(self)

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d, self.xi_x, self.xi_y)

    @classmethod
    def from_oscillator(cls, params, pole="+y"):
        """Inverse map b = alpha/2, c = beta/2, a = gamma + alpha/2, d = -c."""
        al, be, ga = params.alpha, params.beta, params.gamma
        if pole == "-y":
            al, be, ga = -al, -be, -ga
        elif pole != "+y":
            raise InvalidInputError(f"pole must be '+y' or '-y', got {pole!r}")
        c = be / 2.0
        return cls(a=ga + al / 2.0, b=al / 2.0, c=c, d=-c)


@dataclass(frozen=True)
class ReducedCoefficients:
    """Stokes-form coefficients (c0, cz, cx, c)."""

    c0: float
    cz: float
    cx: float
    c: float

    def __post_init__(self):
        for name in ("c0", "cz", "cx", "c"):
            object.__setattr__(self, name, _finite_real(name, getattr(self, name)))

    def to_coefficients(self):
        """Inverse of :func:`reduce_coefficients` (requires cx = c0 - cz)."""
        a = self.c0 + self.cz
        b = self.c0 - self.cz
        if abs(b - self.cx) > 1e-12 * max(1.0, abs(self.cx)):
            raise InvalidInputError("reduced set is not the image of (a, b, c, d)")
        return TetragonalCoefficients(a, b, self.c, -self.c)


def reduce_coefficients(coeffs):
    return ReducedCoefficients(
        c0=(coeffs.a + coeffs.b) / 2.0,
        cz=(coeffs.a - coeffs.b) / 2.0,
        cx=coeffs.b,
        c=coeffs.c,
    )


# ---------------------------------------------------------------------------
# Pointwise operations
# ---------------------------------------------------------------------------

def stokes_components(ux, uy):
    """Vectorized Stokes parameters ``(s0, sx, sy, sz)`` from arrays."""
    ux = np.asarray(ux, dtype=complex)
    uy = np.asarray(uy, dtype=complex)
    ix = ux.real ** 2 + ux.imag ** 2
    iy = uy.real ** 2 + uy.imag ** 2
    cross = np.conj(ux) * uy
    return ix + iy, 2.0 * cross.real, 2.0 * cross.imag, ix - iy


def stokes_from_amplitudes(amps):
    if not isinstance(amps, PolarizationAmplitudes):
        amps = PolarizationAmplitudes(*amps)
    return StokesVector(*(float(v) for v in stokes_components(amps.ux, amps.uy)))


def _unpack_amplitudes(amps):
    if isinstance(amps, PolarizationAmplitudes):
        return amps.ux, amps.uy
    ux, uy = amps
    return _finite_complex("ux", ux), _finite_complex("uy", uy)


def _rhs_scalar(ux, uy, a, b, c, d, xix, xiy):
    ix = ux.real * ux.real + ux.imag * ux.imag
    iy = uy.real * uy.real + uy.imag * uy.imag
    uxc = ux.conjugate()
    uyc = uy.conjugate()
    # i du/dz = F  =>  du/dz = -i F
    fx = (-0.5 * xix * ux - a * ix * ux - b * (2.0 * iy * ux + uy * uy * uxc)
          - c * (2.0 * ix * uy + ux * ux * uyc) - d * iy * uy)
    fy = (-0.5 * xiy * uy - a * iy * uy - b * (2.0 * ix * uy + ux * ux * uyc)
          + c * (2.0 * iy * ux + uy * uy * uxc) + d * ix * ux)
    return -1j * fx, -1j * fy


def coupled_mode_rhs(amps, coeffs):
    """Right-hand side ``(du_x/dz, du_y/dz)`` of the coupled-mode equations.

    ``amps`` may be a :class:`PolarizationAmplitudes` or any pair of complex
    numbers (the zero field is allowed here).
    """
    ux, uy = _unpack_amplitudes(amps)
    dx, dy = _rhs_scalar(ux, uy, *coeffs.as_tuple())
    return np.array([dx, dy], dtype=complex)


def stokes_rhs(s, rc):
    """Stokes-space equations of motion; returns ``(0, dSx, dSy, dSz)``."""
    if isinstance(s, StokesVector):
        sx, sy, sz = s.sx, s.sy, s.sz
    else:
        _, sx, sy, sz = s
    u = rc.c * sx + rc.cz * sz
    v = rc.cx * sx + rc.c * sz
    return np.array([0.0, 2.0 * sy * u, 2.0 * sz * v - 2.0 * sx * u, -2.0 * sy * v])


def hamiltonian_value(s, rc):
    """Stokes-form Hamiltonian."""
    if isinstance(s, StokesVector):
        s0, sx, _, sz = s.s0, s.sx, s.sy, s.sz
    else:
        s0, sx, _, sz = (np.asarray(v, dtype=float) for v in s)
    return -0.5 * (rc.c0 * s0 ** 2 + rc.cz * sz ** 2 + 2.0 * rc.c * sz * sx
                   + rc.cx * sx ** 2)


def second_invariant(s, rc):
    """``cz Sz^2 + 2 c Sz Sx + cx Sx^2``, conserved at fixed coefficients."""
    if isinstance(s, StokesVector):
        sx, sz = s.sx, s.sz
    else:
        sx, sz = np.asarray(s[1], dtype=float), np.asarray(s[3], dtype=float)
    return rc.cz * sz ** 2 + 2.0 * rc.c * sz * sx + rc.cx * sx ** 2


def amplitude_hamiltonian(amps, coeffs):
    """Amplitude-form Hamiltonian (xi terms excluded), written in u and u*."""
    ux, uy = _unpack_amplitudes(amps)
    rc = reduce_coefficients(coeffs)
    ix = (ux * ux.conjugate()).real
    iy = (uy * uy.conjugate()).real
    mix = (ux.conjugate() * uy + uy.conjugate() * ux).real
    return -0.5 * (rc.c0 * (ix + iy) ** 2 + rc.cz * (ix - iy) ** 2
                   + rc.cx * mix ** 2 + 2.0 * rc.c * (ix - iy) * mix)


# ---------------------------------------------------------------------------
# Hamiltonian structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructureCheck:
    passed: bool
    max_residual: float
    n_samples: int


def _require_hamiltonian(coeffs):
    if coeffs.xi_x != 0 or coeffs.xi_y != 0:
        raise StructureViolationError(
            "linear terms xi_x, xi_y must vanish for the Hamiltonian form",
            relation="xi = 0")
    if coeffs.integrability_violation > INTEGRABILITY_RTOL * max(1.0, abs(coeffs.c)):
        raise StructureViolationError(
            f"coefficients violate d = -c (d + c = {coeffs.d + coeffs.c!r}); "
            "equivalently d_y = c_x and d_x = c_y",
            relation="d = -c")


def _wirtinger_gradient(amps, coeffs, step):
    """Central-difference ``dH/du_j*`` for both components."""
    u = [complex(amps[0]), complex(amps[1])]
    grad = []
    for j in range(2):
        parts = []
        for shift in (step, 1j * step):
            up = list(u)
            um = list(u)
            up[j] += shift
            um[j] -= shift
            parts.append((amplitude_hamiltonian(up, coeffs)
                          - amplitude_hamiltonian(um, coeffs)) / (2.0 * step))
        grad.append(0.5 * (parts[0] + 1j * parts[1]))
    return np.array(grad)


def check_hamiltonian_structure(coeffs, sample_states, step=1e-6, bound=1e-6):
    """Compare the coupled-mode RHS with ``-i dH/du*`` on sample states.

    Raises
    ------
    StructureViolationError
        If ``d != -c`` beyond the integrability gate or xi is nonzero.
    """
    _require_hamiltonian(coeffs)
    worst = 0.0
    n = 0
    for state in sample_states:
        ux, uy = _unpack_amplitudes(state)
        rhs = coupled_mode_rhs((ux, uy), coeffs)
        fd = -1j * _wirtinger_gradient((ux, uy), coeffs, step)
        scale = max(np.linalg.norm(rhs), np.linalg.norm(fd))
        if scale > 0:
            worst = max(worst, float(np.linalg.norm(rhs - fd) / scale))
        n += 1
    return StructureCheck(passed=worst < bound, max_residual=worst, n_samples=n)


# ---------------------------------------------------------------------------
# Linearization at the poles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PoleLinearization:
    params: OscillatorParams
    pole: str
    q: str = "sx"
    p: str = "sz"


def linearize_at_pole(rc, pole="+y"):
    """Oscillator parameters of the small oscillations about a pole."""
    alpha, beta, gamma = 2.0 * rc.cx, 2.0 * rc.c, 2.0 * rc.cz
    if pole == "-y":
        alpha, beta, gamma = -alpha, -beta, -gamma
    elif pole != "+y":
        raise InvalidInputError(f"pole must be '+y' or '-y', got {pole!r}")
    return PoleLinearization(OscillatorParams(alpha, beta, gamma), pole)


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _as_schedule(coeffs):
    """Return (schedule, fixed) where schedule(z) -> TetragonalCoefficients."""
    if isinstance(coeffs, TetragonalCoefficients):
        return (lambda z: coeffs), True
    if callable(coeffs):
        return coeffs, False
    raise InvalidInputError("coefficients must be TetragonalCoefficients or callable")


@dataclass(frozen=True)
class IntegrationDiagnostics:
    nfev: int
    n_steps: int
    step_z: np.ndarray = field(repr=False)
    step_sphere_drift: np.ndarray = field(repr=False)
    max_sphere_drift: float = 0.0


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of the polarization dynamics.

    ``stokes`` has shape (n, 4); ``amplitudes`` (n, 2) complex is present
    only for amplitude-form integrations.
    """

    z: np.ndarray
    form: str
    stokes: np.ndarray
    amplitudes: Any
    schedule: Callable = field(repr=False, compare=False)
    fixed: bool
    diagnostics: IntegrationDiagnostics
    dense: Any = field(default=None, repr=False, compare=False)

    def coefficients_at(self, z):
        return self.schedule(z)


class _Diverged(Exception):
    def __init__(self, z):
        self.z = z


def _amplitude_system(schedule, fixed):
    if fixed:
        consts = schedule(0.0).as_tuple()

        def rhs(z, y):
            ux = complex(y[0], y[1])
            uy = complex(y[2], y[3])
            dx, dy = _rhs_scalar(ux, uy, *consts)
            if not (math.isfinite(abs(dx)) and math.isfinite(abs(dy))):
                raise _Diverged(z)
            return [dx.real, dx.imag, dy.real, dy.imag]
    else:
        def rhs(z, y):
            ux = complex(y[0], y[1])
            uy = complex(y[2], y[3])
            dx, dy = _rhs_scalar(ux, uy, *schedule(z).as_tuple())
            if not (math.isfinite(abs(dx)) and math.isfinite(abs(dy))):
                raise _Diverged(z)
            return [dx.real, dx.imag, dy.real, dy.imag]
    return rhs


def _stokes_system(schedule, fixed):
    def reduced_at(z):
        co = schedule(z)
        if co.xi_x != 0 or co.xi_y != 0:
            raise InvalidInputError("the Stokes form does not support xi terms")
        return co.a, co.b, co.c

    if fixed:
        const = reduced_at(0.0)
    def rhs(z, y):
        a, b, c = const if fixed else reduced_at(z)
        cz = 0.5 * (a - b)
        sx, sy, sz = y
        u = c * sx + cz * sz
        v = b * sx + c * sz
        out = [2.0 * sy * u, 2.0 * sz * v - 2.0 * sx * u, -2.0 * sy * v]
        if not all(math.isfinite(w) for w in out):
            raise _Diverged(z)
        return out
    return rhs


def integrate(initial, coeffs, z_span, *, z_eval=None, samples=201,
              rtol=1e-11, atol=1e-11, max_step=np.inf):
    """Integrate the dynamics from ``initial`` over ``z_span``.

    Parameters
    ----------
    initial : PolarizationAmplitudes or StokesVector
        Selects the amplitude or Stokes form.
    coeffs : TetragonalCoefficients or callable
        Fixed coefficients, or a schedule ``z -> TetragonalCoefficients``.
    z_span : (float, float)
    z_eval : array_like, optional
        Output grid; defaults to ``samples`` uniform points.
    rtol, atol : float
        Tolerances for the 8(5,3) Dormand-Prince integrator.

    Returns
    -------
    Trajectory
    """
    z0, z1 = (float(v) for v in z_span)
    if not (math.isfinite(z0) and math.isfinite(z1)) or z1 <= z0:
        raise InvalidInputError(f"z_span must be finite and increasing, got {z_span!r}")
    if not (rtol > 0 and atol > 0):
        raise InvalidInputError("tolerances must be positive")
    schedule, fixed = _as_schedule(coeffs)
    if z_eval is None:
        z_eval = np.linspace(z0, z1, int(samples))
    z_eval = np.asarray(z_eval, dtype=float)

    if isinstance(initial, PolarizationAmplitudes):
        form = "amplitude"
        y0 = [initial.ux.real, initial.ux.imag, initial.uy.real, initial.uy.imag]
        rhs = _amplitude_system(schedule, fixed)
    elif isinstance(initial, StokesVector):
        form = "stokes"
        y0 = [initial.sx, initial.sy, initial.sz]
        rhs = _stokes_system(schedule, fixed)
    else:
        raise InvalidInputError("initial state must be PolarizationAmplitudes or StokesVector")

    try:
        sol = solve_ivp(rhs, (z0, z1), y0, method="DOP853", t_eval=z_eval,
                        rtol=rtol, atol=atol, max_step=max_step, dense_output=True)
    except _Diverged as exc:
        raise DivergenceError("state became non-finite", z=float(exc.z)) from None
    if sol.status != 0:
        zbad = float(sol.t[-1]) if sol.t.size else z0
        raise StiffnessError(f"integration failed: {sol.message}", z=zbad)
    y = sol.y
    if not np.all(np.isfinite(y)):
        bad = int(np.argmax(~np.all(np.isfinite(y), axis=0)))
        raise DivergenceError("state became non-finite", z=float(sol.t[bad]))

    if form == "amplitude":
        amps = np.stack([y[0] + 1j * y[1], y[2] + 1j * y[3]], axis=1)
        stokes = np.stack(stokes_components(amps[:, 0], amps[:, 1]), axis=1)
        norm0 = abs(initial.ux) ** 2 + abs(initial.uy) ** 2
    else:
        amps = None
        s0 = initial.s0
        stokes = np.column_stack([np.full(y.shape[1], s0), y[0], y[1], y[2]])
        norm0 = initial.sx ** 2 + initial.sy ** 2 + initial.sz ** 2

    step_z = np.asarray(sol.sol.ts)
    ys = sol.sol(step_z)
    if form == "amplitude":
        sq = (ys[0] ** 2 + ys[1] ** 2 + ys[2] ** 2 + ys[3] ** 2) ** 2
        ref = norm0 ** 2
    else:
        sq = ys[0] ** 2 + ys[1] ** 2 + ys[2] ** 2
        ref = norm0
    step_drift = np.abs(sq - ref) / ref if ref > 0 else np.abs(sq)
    diag = IntegrationDiagnostics(
        nfev=int(sol.nfev), n_steps=int(step_z.size - 1), step_z=step_z,
        step_sphere_drift=step_drift, max_sphere_drift=float(step_drift.max()))
    return Trajectory(z=np.asarray(sol.t), form=form, stokes=stokes, amplitudes=amps,
                      schedule=schedule, fixed=fixed, diagnostics=diag, dense=sol.sol)


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InvariantReport:
    """Maximum relative drifts of S0^2 and of the quadratic invariant.

    The quadratic invariant is normalized by ``(|cz| + 2|c| + |cx|) S0^2``,
    its natural scale on the sphere, since its own value may vanish.
    ``second_asserted`` is False for z-dependent coefficients.
    """

    s0_drift: float
    quad_drift: float
    second_asserted: bool


def invariants(traj, rc=None):
    st = traj.stokes
    if traj.form == "amplitude":
        s0sq = st[:, 0] ** 2
    else:
        s0sq = st[:, 1] ** 2 + st[:, 2] ** 2 + st[:, 3] ** 2
    s0_drift = float(np.max(np.abs(s0sq - s0sq[0])) / s0sq[0])
    if rc is None:
        rc = reduce_coefficients(traj.coefficients_at(traj.z[0]))
    if traj.fixed:
        q = second_invariant(st.T, rc)
    else:
        q = np.array([second_invariant(s, reduce_coefficients(traj.coefficients_at(z)))
                      for z, s in zip(traj.z, st)])
    scale = (abs(rc.cz) + 2.0 * abs(rc.c) + abs(rc.cx)) * s0sq[0]
    quad_drift = float(np.max(np.abs(q - q[0])) / scale) if scale > 0 else 0.0
    return InvariantReport(s0_drift=s0_drift, quad_drift=quad_drift,
                           second_asserted=traj.fixed)


def _unwrap_refined(z, values, evaluate, depth=0, max_depth=12):
    """Unwrap phases, bisecting intervals whose increment exceeds pi/2."""
    phase = np.angle(values)
    steps = np.diff(phase)
    steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
    out = [0.0]
    for k, dphi in enumerate(steps):
        if abs(dphi) > np.pi / 2 and evaluate is not None:
            if depth >= max_depth:
                raise ResolutionError("phase jump not resolved by refinement",
                                      z=float(z[k]))
            zz = np.linspace(z[k], z[k + 1], 5)
            sub = _unwrap_refined(zz, evaluate(zz), evaluate, depth + 1, max_depth)
            dphi = sub[-1] - sub[0]
        out.append(out[-1] + dphi)
    return phase[0] + np.array(out)


def global_phase(traj):
    """Unwrapped overall phase ``(arg u_x + arg u_y) / 2`` along ``traj.z``."""
    if traj.form != "amplitude":
        raise InvalidInputError("global phase requires an amplitude-form trajectory")
    amps = traj.amplitudes
    mag = np.abs(amps)
    floor = 1e-12 * np.sqrt(np.sum(mag ** 2, axis=1))
    bad = np.nonzero((mag[:, 0] <= floor) | (mag[:, 1] <= floor))[0]
    if bad.size:
        raise PhaseUndefinedError("amplitude vanishes; phase undefined",
                                  z=float(traj.z[bad[0]]))

    def component(j):
        if traj.dense is None:
            return None

        def ev(zz):
            y = traj.dense(zz)
            return y[2 * j] + 1j * y[2 * j + 1]
        return ev

    phx = _unwrap_refined(traj.z, amps[:, 0], component(0))
    phy = _unwrap_refined(traj.z, amps[:, 1], component(1))
    return 0.5 * (phx + phy)


CSV_COLUMNS = ("z", "re_ux", "im_ux", "re_uy", "im_uy", "s0", "sx", "sy", "sz",
               "lambda", "H", "inv2")


def trajectory_rows(traj):
    """Rows for the trajectory CSV; amplitude columns are NaN in Stokes form."""
    nan = float("nan")
    if traj.form == "amplitude":
        try:
            lam = global_phase(traj)
        except PhaseUndefinedError:
            lam = np.full(traj.z.size, nan)
    else:
        lam = np.full(traj.z.size, nan)
    rows = []
    for k, z in enumerate(traj.z):
        rc = reduce_coefficients(traj.coefficients_at(float(z)))
        s = traj.stokes[k]
        if traj.amplitudes is not None:
            ux, uy = traj.amplitudes[k]
            amp = [ux.real, ux.imag, uy.real, uy.imag]
        else:
            amp = [nan] * 4
        rows.append([float(z), *amp, *s, lam[k], hamiltonian_value(s, rc),
                     second_invariant(s, rc)])
    return rows


def write_trajectory_csv(traj, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in trajectory_rows(traj):
            w.writerow([repr(float(v)) for v in row])


def read_trajectory_csv(path):
    """Read a trajectory CSV back into a dict of column arrays."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(v) for v in row] for row in r])
    if data.size == 0:
        data = np.empty((0, len(header)))
    return {name: data[:, k] for k, name in enumerate(header)}
