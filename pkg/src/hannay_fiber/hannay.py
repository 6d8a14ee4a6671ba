"""Hannay angle of the generalized harmonic oscillator.

Three routes are provided:

* flux of the angle 2-form through a spanning surface,
  ``W = (alpha dbeta^dgamma + beta dgamma^dalpha + gamma dalpha^dbeta) / (4 omega^3)``;
* the line integral of the potential ``A = 1/2 (beta/gamma) d(gamma/omega)``,
  with ``dA = W``;
* direct simulation of the full nonlinear polarization dynamics while the
  parameters are carried slowly around the loop.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.special import roots_legendre

from .errors import (AdiabaticityWarning, ChartError, InternalConsistencyError,
                     InvalidInputError, NonlinearityBreachError, ResolutionError,
                     SingularityError)
from .loops import discriminant
from .oscillator import (ActionAngleState, OscillatorParams, action_angle_to_pq,
                         frequency)
from .polarization import (PolarizationAmplitudes, StokesVector,
                           TetragonalCoefficients, global_phase, integrate)

# ---------------------------------------------------------------------------
# Angle 2-form
# ---------------------------------------------------------------------------


def _bivector_components(bivector):
    """Components (B_bg, B_ga, B_ab) of a bivector.

    Accepts either the three components directly or a pair of tangent
    vectors ``(v1, v2)``, for which the components are ``v1 x v2``.
    """
    b = np.asarray(bivector, dtype=float)
    if b.shape == (3,):
        return b
    if b.shape == (2, 3):
        return np.cross(b[0], b[1])
    raise InvalidInputError("bivector must be 3 components or a pair of 3-vectors")


def two_form_density(x, n):
    """Pair W at points ``x`` (3, N) with bivector components ``n`` (3, N).

    Raises
    ------
    SingularityError
        If any point has a non-positive discriminant.
    """
    disc = discriminant(x)
    if np.any(~(disc > 0)):
        k = int(np.argmin(np.where(np.isnan(disc), -np.inf, disc)))
        raise SingularityError(
            "angle 2-form evaluated at or beyond the critical surface",
            discriminant=float(disc[k]),
            region=f"(alpha, beta, gamma) = {tuple(float(v) for v in x[:, k])}")
    return (x[0] * n[0] + x[1] * n[1] + x[2] * n[2]) / (4.0 * disc * np.sqrt(disc))


def angle_two_form(params, bivector):
    """Pairing of W at ``params`` with an oriented bivector."""
    if not isinstance(params, OscillatorParams):
        params = OscillatorParams(*params)
    x = params.as_array()[:, None]
    n = _bivector_components(bivector)[:, None]
    return float(two_form_density(x, n)[0])


# ---------------------------------------------------------------------------
# Surface integral
# ---------------------------------------------------------------------------

def _collapsed_gauss(order):
    """Collapsed Gauss rule on the reference triangle (0,0), (1,0), (0,1)."""
    x, w = roots_legendre(order)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ww = np.outer(wu, wu) * (1.0 - vv)
    return uu.ravel() * (1.0 - vv.ravel()), vv.ravel(), ww.ravel()


def _triangle_values(surface, tris, rule):
    """Integral of the pulled-back 2-form over each parameter triangle.

    Also returns a round-off estimate per triangle: with coordinates known
    to relative precision eps, the discriminant loses about
    ``(|alpha| + |beta| + |gamma|)^2 / disc`` in relative accuracy near the
    critical surface.
    """
    rx, ry, rw = rule
    v0, v1, v2 = tris[:, 0, :], tris[:, 1, :], tris[:, 2, :]
    e1 = v1 - v0
    e2 = v2 - v0
    area2 = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    pts = (v0[:, None, :] + rx[None, :, None] * e1[:, None, :]
           + ry[None, :, None] * e2[:, None, :])
    t = pts[..., 0].ravel()
    s = pts[..., 1].ravel()
    x, xt, xs = surface.evaluate(t, s)
    dens = two_form_density(x, np.cross(xt, xs, axis=0))
    cond = np.sum(np.abs(x), axis=0) ** 2 / discriminant(x)
    noise = (np.abs(dens) * (1.0 + cond)).reshape(tris.shape[0], rx.size)
    dens = dens.reshape(tris.shape[0], rx.size)
    eps = np.finfo(float).eps
    return area2 * (dens @ rw), 16.0 * eps * area2 * (noise @ rw)


def _split(tris):
    """Midpoint subdivision into four similar children, shape (K, 4, 3, 2)."""
    v0, v1, v2 = tris[:, 0], tris[:, 1], tris[:, 2]
    m01 = 0.5 * (v0 + v1)
    m12 = 0.5 * (v1 + v2)
    m20 = 0.5 * (v2 + v0)
    return np.stack([
        np.stack([v0, m01, m20], axis=1),
        np.stack([m01, v1, m12], axis=1),
        np.stack([m20, m12, v2], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ], axis=1)


@dataclass(frozen=True)
class SurfaceIntegral:
    value: float
    error: float
    n_triangles: int
    levels: int


def hannay_surface_integral(loop, tol=1e-10, rtol=1e-10, order=6, max_levels=20,
                            max_triangles=100_000):
    """Flux of W through the loop's spanning surface.

    Each triangle is integrated with a collapsed Gauss rule and compared
    with the sum over its four midpoint children.  A triangle is accepted
    when the difference falls below its parameter-area share of
    ``max(tol, rtol * |estimate|)``, or below its round-off floor, and
    refined otherwise.

    Returns
    -------
    SurfaceIntegral
    """
    rule = _collapsed_gauss(order)
    tris = loop.surface.initial_triangles().astype(float)

    def area(tr):
        e1 = tr[:, 1] - tr[:, 0]
        e2 = tr[:, 2] - tr[:, 0]
        return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    total_area = float(area(tris).sum())
    parent, _ = _triangle_values(loop.surface, tris, rule)
    accepted = []
    done = 0.0
    err = 0.0
    n_acc = 0
    level = 0
    while tris.shape[0]:
        if tris.shape[0] > max_triangles:
            raise ResolutionError(
                f"surface quadrature needs more than {max_triangles} active triangles")
        if level >= max_levels:
            raise ResolutionError("surface quadrature hit the refinement limit")
        kids = _split(tris)
        kid_vals, kid_noise = _triangle_values(loop.surface, kids.reshape(-1, 3, 2), rule)
        kid_vals = kid_vals.reshape(-1, 4)
        fine = kid_vals.sum(axis=1)
        diff = np.abs(fine - parent)
        budget = max(tol, rtol * abs(done + fine.sum()))
        floor = kid_noise.reshape(-1, 4).sum(axis=1)
        ok = diff <= np.maximum(budget * area(tris) / total_area, floor)
        accepted.append(fine[ok])
        done += float(fine[ok].sum())
        err += float(diff[ok].sum())
        n_acc += int(ok.sum())
        keep = ~ok
        tris = kids[keep].reshape(-1, 3, 2)
        parent = kid_vals[keep].ravel()
        level += 1
    value = float(np.sum(np.sort(np.concatenate(accepted)))) if accepted else 0.0
    return SurfaceIntegral(value=value, error=err, n_triangles=n_acc, levels=level)


# ---------------------------------------------------------------------------
# Line integral
# ---------------------------------------------------------------------------

def _potential_integrand(x, dx):
    """``A(dx) = 1/2 (beta/gamma) d(gamma/omega)`` along tangent ``dx``."""
    a, b, g = x
    da, db, dg = dx
    disc = a * g - b * b
    w = np.sqrt(disc)
    dw = (da * g + a * dg - 2.0 * b * db) / (2.0 * w)
    return 0.5 * (b / g) * (dg / w - g * dw / disc)


def _check_line_chart(path, n=4096):
    s = np.linspace(0.0, 1.0, n, endpoint=False)
    x = path.points(s)
    disc = discriminant(x)
    if np.any(disc <= 0):
        raise SingularityError("loop reaches the critical set", discriminant=float(disc.min()))
    g = x[2]
    if np.any(g == 0) or (np.any(g > 0) and np.any(g < 0)):
        raise ChartError("gamma changes sign on the loop; the potential is invalid "
                         "there, use the surface integral")


@dataclass(frozen=True)
class LineIntegral:
    value: float
    error: float
    n_panels: int


def hannay_line_integral(loop, tol=1e-12, order=8, max_doublings=10):
    """Circulation of ``A = 1/2 (beta/gamma) d(gamma/omega)`` around the loop.

    Composite Gauss-Legendre over the path's breakpoints, doubling the
    panels until successive values agree to ``tol`` (relative above 1).
    """
    _check_line_chart(loop.path)
    x, w = roots_legendre(order)
    edges = loop.path.breakpoints()
    prev = None
    err = float("inf")
    for _ in range(max_doublings + 1):
        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        s = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
        f = _potential_integrand(loop.path.points(s.ravel()),
                                 loop.path.tangent(s.ravel())).reshape(s.shape)
        val = float(np.sum(np.sort((f @ w) * half)))
        if prev is not None:
            err = abs(val - prev)
            if err <= tol * max(1.0, abs(val)):
                return LineIntegral(val, err, lo.size)
        prev = val
        mid = 0.5 * (lo + hi)
        edges = np.sort(np.concatenate([edges, mid]))
    warnings.warn("line integral did not reach the requested tolerance", RuntimeWarning)
    return LineIntegral(prev, err, lo.size)


# ---------------------------------------------------------------------------
# Adiabatic route
# ---------------------------------------------------------------------------

def ramp(z, length):
    """Traversal fraction with zero speed at both ends."""
    u = np.asarray(z, dtype=float) / length
    return u - np.sin(2.0 * np.pi * u) / (2.0 * np.pi)


def default_coefficient_map(params, pole="+y"):
    return TetragonalCoefficients.from_oscillator(params, pole)


def choose_loop_chart(loop, n=2048):
    """Chart used for a whole loop: the pivot (gamma or alpha) of larger relative size."""
    s = np.linspace(0.0, 1.0, n, endpoint=False)
    x = loop.path.points(s)
    scale = np.max(np.abs(x), axis=0)
    rel_g = np.min(np.abs(x[2]) / scale)
    rel_a = np.min(np.abs(x[0]) / scale)
    if rel_g >= 0.1 or rel_g >= rel_a:
        return "gamma"
    return "alpha"


def _angles(q, p, x, omega, chart):
    a, b, g = x
    if chart == "gamma":
        return np.arctan2(-(b * q + g * p) / omega, q)
    return np.arctan2((a * q + b * p) / omega, p)


def default_sweep_length(loop, periods=16.0):
    """Sweep length covering ``periods`` oscillations at the slowest frequency."""
    wmin, _ = loop.frequency_range()
    return periods * 2.0 * np.pi / wmin


@dataclass(frozen=True)
class AdiabaticRun:
    length: float
    delta_theta: float
    lambda_shift: float
    action_drift: float
    max_excursion: float
    nfev: int
    trajectory: object = field(default=None, repr=False, compare=False)


def richardson_converged(values, extrapolated, floor=1e-6):
    """Whether raw values approach ``extrapolated`` like ``1/L``.

    Requires a strictly decreasing error sequence and a ratio of successive
    differences within [1.5, 3] (2 for a pure ``1/L`` series).  Sequences
    whose successive differences are all below ``floor`` radians count as
    converged.
    """
    f1, f2, f4 = values
    d1, d2 = f2 - f1, f4 - f2
    if max(abs(d1), abs(d2)) <= floor:
        return True
    errs = np.abs(np.asarray(values) - extrapolated)
    if not errs[0] > errs[1] > errs[2] or d2 == 0:
        return False
    return 1.5 <= d1 / d2 <= 3.0


def _richardson(values):
    f1, f2, f4 = values
    r1 = 2.0 * f2 - f1
    r2 = 2.0 * f4 - f2
    return (4.0 * r2 - r1) / 3.0


def _period_mean(z, r, period, at_end):
    if at_end:
        m = z >= z[-1] - period
    else:
        m = z <= z[0] + period
    zz, rr = z[m], r[m]
    if zz.size < 2:
        return float(rr.mean())
    return float(np.trapezoid(rr, zz) / (zz[-1] - zz[0]))


def adiabatic_run(loop, length, action=1e-8, *, pole="+y", angle0=0.3,
                  coefficient_map=None, chart=None, rtol=1e-12, atol=1e-12,
                  samples_per_period=16, breach=0.05, keep_trajectory=False):
    """One adiabatic traversal of ``loop`` over ``z in [0, length]``."""
    if length <= 0 or not math.isfinite(length):
        raise InvalidInputError("sweep length must be positive and finite")
    if not action > 0:
        raise InvalidInputError("initial action must be positive")
    cmap = coefficient_map or default_coefficient_map
    chart = chart or choose_loop_chart(loop)
    path = loop.path
    wmin, wmax = loop.frequency_range()

    p0 = OscillatorParams(*path.points(np.array([0.0]))[:, 0])
    omega0 = frequency(p0)
    pivot = p0.gamma if chart == "gamma" else p0.alpha
    signed_action = action * np.sign(pivot)
    q0, pp0 = action_angle_to_pq(ActionAngleState(signed_action, angle0), p0, chart)
    ysign = 1.0 if pole == "+y" else -1.0
    rad = 1.0 - q0 * q0 - pp0 * pp0
    if max(abs(q0), abs(pp0)) > breach or rad <= 0:
        raise NonlinearityBreachError("initial state outside the linearization neighborhood",
                                      z=0.0)
    s_init = StokesVector(1.0, q0, ysign * math.sqrt(rad), pp0)
    amps0 = PolarizationAmplitudes.from_stokes(s_init)

    def schedule(z):
        x = path.points(np.array([ramp(z, length)]))[:, 0]
        return cmap(OscillatorParams(*x), pole)

    n = int(math.ceil(length * wmax / (2.0 * np.pi) * samples_per_period)) + 1
    z = np.linspace(0.0, length, max(n, 65))
    traj = integrate(amps0, schedule, (0.0, length), z_eval=z, rtol=rtol, atol=atol)

    # q = Sx, p = Sz at either pole; the map already absorbs the -y sign
    x_osc = path.points(ramp(z, length))
    disc = discriminant(x_osc)
    omega = np.sqrt(disc)
    q = traj.stokes[:, 1]
    p = traj.stokes[:, 3]
    excursion = float(np.max(np.maximum(np.abs(q), np.abs(p))))
    if excursion > breach:
        k = int(np.argmax(np.maximum(np.abs(q), np.abs(p)) > breach))
        raise NonlinearityBreachError(
            f"|Sx| or |Sz| exceeded {breach!r}", z=float(z[k]))

    theta = np.unwrap(_angles(q, p, x_osc, omega, chart))
    phase_int = cumulative_simpson(omega, x=z, initial=0.0)
    dtheta = float(theta[-1] - theta[0] - phase_int[-1])

    energy = 0.5 * (x_osc[0] * q * q + 2.0 * x_osc[1] * p * q + x_osc[2] * p * p)
    act = energy / omega
    drift = float(np.max(np.abs(act - act[0])) / abs(act[0]))

    lam = global_phase(traj)
    c0 = np.array([0.5 * (co.a + co.b) for co in map(schedule, z)])
    resid = lam - cumulative_simpson(c0, x=z, initial=0.0)
    period = 2.0 * np.pi / omega0
    lshift = (_period_mean(z, resid, period, True)
              - _period_mean(z, resid, period, False))
    return AdiabaticRun(length=float(length), delta_theta=dtheta, lambda_shift=lshift,
                        action_drift=drift, max_excursion=excursion,
                        nfev=traj.diagnostics.nfev,
                        trajectory=traj if keep_trajectory else None)


@dataclass(frozen=True)
class AdiabaticResult:
    """Raw and Richardson-extrapolated adiabatic estimates."""

    runs: tuple
    delta_theta: float
    lambda_shift: float
    converged: bool

    @property
    def lengths(self):
        return np.array([r.length for r in self.runs])

    @property
    def raw_delta_theta(self):
        return np.array([r.delta_theta for r in self.runs])

    @property
    def raw_lambda_shift(self):
        return np.array([r.lambda_shift for r in self.runs])

    def table(self):
        return [{"length": r.length, "delta_theta": r.delta_theta,
                 "lambda_shift": r.lambda_shift, "action_drift": r.action_drift,
                 "max_excursion": r.max_excursion, "nfev": r.nfev} for r in self.runs]


def adiabatic_hannay(loop, length=None, action=1e-8, *, workers=1, **kwargs):
    """Adiabatic estimate of the Hannay angle with Richardson extrapolation.

    Runs the traversal at ``L``, ``2L`` and ``4L``.  The raw estimates are
    assumed to carry an error series in ``1/L`` and are extrapolated in two
    stages.  A non-monotone error sequence raises an
    :class:`AdiabaticityWarning` carrying the raw values.

    Parameters
    ----------
    loop : ParameterLoop
    length : float, optional
        Base sweep length; defaults to 16 periods of the slowest frequency.
    action : float
        Initial action in Stokes units.
    workers : int
        Threads used for the three sweeps (results are order-independent).
    **kwargs
        Passed to :func:`adiabatic_run`.
    """
    if length is None:
        length = default_sweep_length(loop)
    lengths = [length, 2.0 * length, 4.0 * length]

    def run(L):
        return adiabatic_run(loop, L, action, **kwargs)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            runs = tuple(ex.map(run, lengths))
    else:
        runs = tuple(run(L) for L in lengths)
    dth = [r.delta_theta for r in runs]
    lsh = [r.lambda_shift for r in runs]
    ext = _richardson(dth)
    converged = richardson_converged(dth, ext)
    if not converged:
        warnings.warn(AdiabaticityWarning(
            f"non-monotone adiabatic sequence; raw delta_theta = {dth!r}"))
    return AdiabaticResult(runs=runs, delta_theta=float(ext),
                           lambda_shift=float(_richardson(lsh)), converged=converged)


# ---------------------------------------------------------------------------
# Singularity probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeTable:
    """Hannay angles of a loop family ordered by decreasing ``eps``."""

    eps: np.ndarray
    gamma_h: np.ndarray
    error: np.ndarray
    monotone: bool
    growth: float
    exponent: float

    def rows(self):
        return [{"eps": float(e), "gamma_H": float(g), "error": float(r)}
                for e, g, r in zip(self.eps, self.gamma_h, self.error)]


def singularity_probe(family, eps_values, tol=1e-10, workers=1, strict=True):
    """Surface-integral Hannay angles along a family approaching the critical set.

    Parameters
    ----------
    family : callable
        ``eps -> ParameterLoop`` whose surface keeps discriminant >= eps.
    eps_values : sequence of float
    strict : bool
        Raise if ``|gamma_H|`` is not strictly increasing as eps decreases.

    The returned ``exponent`` is the measured local slope
    ``d log|gamma_H| / d log eps`` between the two smallest eps values.
    """
    eps = np.array(sorted((float(e) for e in eps_values), reverse=True))
    if eps.size == 0 or np.any(eps <= 0):
        raise InvalidInputError("eps values must be positive")

    def member(e):
        loop = family(e)
        if loop.min_discriminant < e * (1.0 - 1e-9):
            raise SingularityError("family member's surface goes below its eps",
                                   discriminant=loop.min_discriminant,
                                   region=f"eps={e!r}")
        return hannay_surface_integral(loop, tol=tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(member, eps))
    else:
        res = [member(e) for e in eps]
    vals = np.array([r.value for r in res])
    errs = np.array([r.error for r in res])
    mags = np.abs(vals)
    monotone = bool(np.all(np.diff(mags) > 0))
    growth = float(mags[-1] / mags[0]) if mags[0] > 0 else float("inf")
    if eps.size >= 2 and mags[-1] > 0 and mags[-2] > 0:
        exponent = float(np.log(mags[-1] / mags[-2]) / np.log(eps[-1] / eps[-2]))
    else:
        exponent = float("nan")
    if strict and not monotone:
        raise InternalConsistencyError(
            f"|gamma_H| not strictly increasing along the family: {vals.tolist()!r}")
    return ProbeTable(eps=eps, gamma_h=vals, error=errs, monotone=monotone,
                      growth=growth, exponent=exponent)


# ---------------------------------------------------------------------------
# Action-derivative relation
# ---------------------------------------------------------------------------

def geometric_phase_gho(loop, action, n=1.0, theta_samples=64, fd_step=1e-6,
                        order=8, panels=None):
    """``n * circ <p dq/ds>_theta ds`` at fixed action, by direct averaging.

    The torus average is taken on a uniform angle grid, and ``dq/ds`` at
    fixed (I, theta) by central differences in the loop parameter.
    """
    _check_line_chart(loop.path)
    if loop.path.points(np.array([0.0]))[2, 0] < 0:
        raise ChartError("action-derivative check implemented for gamma > 0 only")
    th = 2.0 * np.pi * np.arange(theta_samples) / theta_samples
    x, w = roots_legendre(order)
    edges = loop.path.breakpoints()
    if panels is not None:
        edges = np.linspace(0.0, 1.0, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    s = ((0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]).ravel()

    def qp(sv):
        pts = loop.path.points(sv)
        a, b, g = pts[0][:, None], pts[1][:, None], pts[2][:, None]
        om = np.sqrt(a * g - b * b)
        amp = np.sqrt(2.0 * g * action / om)
        c, sn = np.cos(th)[None, :], np.sin(th)[None, :]
        return amp * c, -amp * ((b / g) * c + (om / g) * sn)

    q_plus, _ = qp(s + fd_step)
    q_minus, _ = qp(s - fd_step)
    _, p = qp(s)
    avg = np.mean(p * (q_plus - q_minus) / (2.0 * fd_step), axis=1)
    avg = avg.reshape(lo.size, order)
    return float(n * np.sum((avg @ w) * half))


def hannay_from_action_derivative(loop, action=1.0, n=1.0, rel_step=1e-3, **kwargs):
    """``-(1/n) d gamma / d I`` by central differences in the action."""
    h = rel_step * action
    gp = geometric_phase_gho(loop, action + h, n=n, **kwargs)
    gm = geometric_phase_gho(loop, action - h, n=n, **kwargs)
    return -(gp - gm) / (2.0 * h * n)
