"""Closed-form geometric phases used as independent oracles.

Includes spherical-polygon solid angles and the Pancharatnam phase on the
Poincare sphere, the Berry phase of a gyrotropic medium, the
Pancharatnam-Berry phase of a rotated retarder and the Weinberg two-state
nonlinear evolution.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidInputError, SingularityError, UndefinedQuantityError

TWO_PI = 2.0 * math.pi


def principal_value(phase):
    """Reduce an angle to (-pi, pi]."""
    r = math.remainder(float(phase), TWO_PI)
    return math.pi if r == -math.pi else r


@dataclass(frozen=True)
class SpherePoint:
    """Point on the unit sphere, normalized to theta in [0, pi], phi in [0, 2 pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        theta, phi = float(self.theta), float(self.phi)
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise InvalidInputError("sphere coordinates must be finite")
        theta = math.fmod(theta, TWO_PI)
        if theta < 0:
            theta += TWO_PI
        if theta > math.pi:
            theta = TWO_PI - theta
            phi += math.pi
        phi = math.fmod(phi, TWO_PI)
        if phi < 0:
            phi += TWO_PI
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_vector(cls, v):
        x, y, z = (float(c) for c in v)
        r = math.sqrt(x * x + y * y + z * z)
        if r == 0:
            raise InvalidInputError("zero vector has no direction")
        return cls(math.acos(max(-1.0, min(1.0, z / r))), math.atan2(y, x))

    def vector(self):
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


def _unit_vectors(vertices):
    out = []
    for v in vertices:
        if isinstance(v, SpherePoint):
            u = v.vector()
        else:
            u = np.asarray(v, dtype=float)
            n = np.linalg.norm(u)
            if u.shape != (3,) or n == 0:
                raise InvalidInputError("vertices must be SpherePoints or nonzero 3-vectors")
            u = u / n
        out.append(u)
    return out


def _drop_repeats(vecs, tol=1e-14):
    kept = []
    for v in vecs:
        if not kept or np.linalg.norm(v - kept[-1]) > tol:
            kept.append(v)
    while len(kept) > 1 and np.linalg.norm(kept[0] - kept[-1]) <= tol:
        kept.pop()
    return kept


def _tangent(a, b):
    """Unit tangent at ``a`` of the geodesic toward ``b``."""
    t = b - np.dot(a, b) * a
    n = np.linalg.norm(t)
    if n <= 1e-14:
        raise UndefinedQuantityError("antipodal adjacent vertices: geodesic is undefined")
    return t / n


def geodesic_polygon_solid_angle(vertices):
    """Signed solid angle enclosed by a geodesic polygon.

    Computed from the turning angles at the vertices (Gauss-Bonnet),
    ``Omega = 2 pi - sum(turning)``, reduced to (-2 pi, 2 pi].
    Counter-clockwise traversal seen from outside is positive.

    Raises
    ------
    UndefinedQuantityError
        If two adjacent vertices are antipodal.
    """
    vecs = _unit_vectors(vertices)
    if len(vecs) < 3:
        raise InvalidInputError("a polygon needs at least three vertices")
    for a, b in zip(vecs, vecs[1:] + vecs[:1]):
        if np.linalg.norm(a + b) <= 1e-14:
            raise UndefinedQuantityError("antipodal adjacent vertices: geodesic is undefined")
    vecs = _drop_repeats(vecs)
    if len(vecs) < 3:
        return 0.0
    total = 0.0
    n = len(vecs)
    for i in range(n):
        prev, cur, nxt = vecs[i - 1], vecs[i], vecs[(i + 1) % n]
        t_in = -_tangent(cur, prev)
        t_out = _tangent(cur, nxt)
        total += math.atan2(float(np.dot(cur, np.cross(t_in, t_out))), float(np.dot(t_in, t_out)))
    omega = TWO_PI - total
    # reduce modulo 4 pi into (-2 pi, 2 pi]
    omega = math.remainder(omega, 2.0 * TWO_PI)
    if omega <= -TWO_PI:
        omega += 2.0 * TWO_PI
    if abs(omega) < 1e-15:
        omega = 0.0
    return omega


def triangle_solid_angle(a, b, c):
    """Signed solid angle of a geodesic triangle (Van Oosterom-Strackee)."""
    a, b, c = _unit_vectors((a, b, c))
    num = float(np.dot(a, np.cross(b, c)))
    den = 1.0 + float(np.dot(a, b) + np.dot(b, c) + np.dot(c, a))
    return 2.0 * math.atan2(num, den)


def fan_solid_angle(vertices):
    """Solid angle by fanning triangles from vertex 0."""
    vecs = _unit_vectors(vertices)
    return sum(triangle_solid_angle(vecs[0], vecs[i], vecs[i + 1]) for i in range(1, len(vecs) - 1))


def pancharatnam_phase(vertices, principal=True):
    """Phase ``-Omega / 2`` acquired around a geodesic polygon.

    With ``principal=False`` the raw ``-Omega / 2`` in [-pi, pi) is returned,
    so a hemisphere gives ``-pi`` rather than its principal value ``pi``.
    """
    phase = -0.5 * geodesic_polygon_solid_angle(vertices)
    return principal_value(phase) if principal else phase


def berry_phase_gyrotropic(theta, sigma):
    """Both helicity branches ``(+gamma, -gamma)`` of the gyrotropic Berry phase.

    ``gamma = 2 pi (1 - 2 cos(theta) / sqrt(sigma^2 sin^4(theta) + 4 cos^2(theta)))``
    """
    theta, sigma = float(theta), float(sigma)
    c, s = math.cos(theta), math.sin(theta)
    # cos(pi/2) is 6e-17 in floating point; snap it so the equator is exact
    if abs(c) < 1e-15:
        c = 0.0
    rad = sigma * sigma * s ** 4 + 4.0 * c * c
    if rad <= 1e-300:
        raise SingularityError(f"singular configuration (theta={theta!r}, sigma={sigma!r})",
                               discriminant=rad)
    g = TWO_PI * (1.0 - 2.0 * c / math.sqrt(rad))
    return g, -g


def pb_retarder_phase(theta1, theta2, delta):
    """``arg[cos^2(delta/2) + sin^2(delta/2) exp(2i(theta2 - theta1))]`` in (-pi, pi]."""
    z = math.cos(0.5 * delta) ** 2 + math.sin(0.5 * delta) ** 2 * np.exp(2j * (theta2 - theta1))
    if abs(z) == 0.0:
        raise UndefinedQuantityError("retarder output has zero projection: phase undefined")
    return principal_value(math.atan2(z.imag, z.real))


# ---------------------------------------------------------------------------
# Weinberg two-state system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolynomialHtilde:
    """``H(p) = sum coeffs[k] p^k`` with its derivative."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def __call__(self, p):
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * p + c
        return acc

    def derivative(self, p):
        acc = 0.0
        for k in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * p + k * self.coeffs[k]
        return acc


def _split_htilde(htilde):
    if hasattr(htilde, "derivative"):
        return htilde, htilde.derivative
    h, dh = htilde
    return h, dh


def weinberg_frequencies(htilde, p):
    """``(omega1, omega2) = (H - p H', H + (1 - p) H')``."""
    h, dh = _split_htilde(htilde)
    hv, dv = h(p), dh(p)
    return hv - p * dv, hv + (1.0 - p) * dv


def _norm_and_p(c1, c2):
    n = abs(c1) ** 2 + abs(c2) ** 2
    if n <= 0:
        raise InvalidInputError("two-state norm must be positive")
    return n, abs(c2) ** 2 / n


def weinberg_two_state(c1, c2, htilde, t):
    """Closed-form evolution ``psi_k(t) = c_k exp(-i omega_k(p) t)``.

    Returns an array of shape (len(t), 2) (or (2,) for scalar ``t``).
    """
    c1, c2 = complex(c1), complex(c2)
    _, p = _norm_and_p(c1, c2)
    w1, w2 = weinberg_frequencies(htilde, p)
    t_arr = np.asarray(t, dtype=float)
    out = np.stack([c1 * np.exp(-1j * w1 * t_arr), c2 * np.exp(-1j * w2 * t_arr)], axis=-1)
    return out


def weinberg_two_state_ode(c1, c2, htilde, t, rtol=1e-13, atol=1e-13):
    """Direct integration of ``i dpsi_k/dt = omega_k(p(psi)) psi_k``."""
    c1, c2 = complex(c1), complex(c2)
    _norm_and_p(c1, c2)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))

    h, dh = _split_htilde(htilde)

    def rhs(_, y):
        x1, y1, x2, y2 = y.tolist()
        m2 = x2 * x2 + y2 * y2
        p = m2 / (x1 * x1 + y1 * y1 + m2)
        hv, dv = h(p), dh(p)
        w1, w2 = hv - p * dv, hv + (1.0 - p) * dv
        return np.array([w1 * y1, -w1 * x1, w2 * y2, -w2 * x2])

    y0 = [c1.real, c1.imag, c2.real, c2.imag]
    span = (0.0, float(t_arr.max())) if t_arr.max() > 0 else (0.0, 0.0)
    if span[1] == 0.0:
        return np.tile([c1, c2], (t_arr.size, 1))
    sol = solve_ivp(rhs, span, y0, method="DOP853", t_eval=t_arr, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise InvalidInputError(f"two-state integration failed: {sol.message}")
    y = sol.y
    return np.stack([y[0] + 1j * y[1], y[2] + 1j * y[3]], axis=-1)


def weinberg_population(psi):
    """``p = |psi2|^2 / n`` along an evolution array of shape (..., 2)."""
    psi = np.asarray(psi)
    n = np.abs(psi[..., 0]) ** 2 + np.abs(psi[..., 1]) ** 2
    return np.abs(psi[..., 1]) ** 2 / n
