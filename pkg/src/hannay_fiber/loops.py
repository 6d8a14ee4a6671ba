"""Closed loops in (alpha, beta, gamma) space and their spanning surfaces.

A path maps s in [0, 1] to a point, periodically.  A surface maps a unit
parameter square (t, s) to space with the path as the image of t = 1;
the orientation of ``X_t x X_s`` follows the traversal of the path by the
right-hand rule.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GeometryError, InvalidInputError, SingularityError

TWO_PI = 2.0 * np.pi
MIN_SPLINE_NODES = 128


def discriminant(x):
    """``alpha gamma - beta^2`` for points stacked along axis 0."""
    x = np.asarray(x, dtype=float)
    return x[0] * x[2] - x[1] ** 2


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

class LoopPath:
    """Base class. Subclasses implement ``points`` and ``tangent``."""

    #: number of smooth panels used by quadrature along the path
    panels = 32

    def points(self, s):
        raise NotImplementedError

    def tangent(self, s):
        raise NotImplementedError

    def breakpoints(self):
        return np.linspace(0.0, 1.0, self.panels + 1)

    def centroid(self, n=4096):
        s = (np.arange(n) + 0.5) / n
        return self.points(s).mean(axis=1)

    def reversed(self):
        return ReversedPath(self)

    def describe(self):
        return {"kind": type(self).__name__}


class ReversedPath(LoopPath):
    def __init__(self, base):
        self.base = base
        self.panels = base.panels

    def points(self, s):
        return self.base.points(1.0 - np.asarray(s, dtype=float))

    def tangent(self, s):
        return -self.base.tangent(1.0 - np.asarray(s, dtype=float))

    def breakpoints(self):
        return np.sort(1.0 - self.base.breakpoints())

    def reversed(self):
        return self.base

    def describe(self):
        return {"kind": "reversed", "base": self.base.describe()}


class HyperbolicCapPath(LoopPath):
    """Loop of constant frequency ``omega`` on the hyperboloid."""

    def __init__(self, omega, chi):
        if omega <= 0 or chi < 0:
            raise InvalidInputError("hyperbolic cap needs omega > 0 and chi >= 0")
        self.omega = float(omega)
        self.chi = float(chi)

    def points(self, s):
        phi = TWO_PI * np.asarray(s, dtype=float)
        ch, sh = np.cosh(self.chi), np.sinh(self.chi)
        return self.omega * np.array([ch + sh * np.cos(phi), sh * np.sin(phi),
                                      ch - sh * np.cos(phi)])

    def tangent(self, s):
        phi = TWO_PI * np.asarray(s, dtype=float)
        sh = np.sinh(self.chi)
        return TWO_PI * self.omega * sh * np.array([-np.sin(phi), np.cos(phi),
                                                    np.sin(phi)])

    def describe(self):
        return {"kind": "hyperbolic-cap", "omega": self.omega, "chi": self.chi}


class CirclePath(LoopPath):
    """Planar circle ``center + r (cos(2 pi s) e1 + sin(2 pi s) e2)``."""

    def __init__(self, center, e1, e2, radius):
        self.center = np.asarray(center, dtype=float)
        self.e1 = np.asarray(e1, dtype=float)
        self.e2 = np.asarray(e2, dtype=float)
        self.radius = float(radius)

    def points(self, s):
        phi = TWO_PI * np.asarray(s, dtype=float)
        return (self.center[:, None]
                + self.radius * (np.multiply.outer(self.e1, np.cos(phi))
                                 + np.multiply.outer(self.e2, np.sin(phi))))

    def tangent(self, s):
        phi = TWO_PI * np.asarray(s, dtype=float)
        return TWO_PI * self.radius * (np.multiply.outer(self.e2, np.cos(phi))
                                       - np.multiply.outer(self.e1, np.sin(phi)))

    def describe(self):
        return {"kind": "circle", "center": self.center.tolist(),
                "e1": self.e1.tolist(), "e2": self.e2.tolist(), "radius": self.radius}


class FourierPath(LoopPath):
    """``center + sum_k (A_k cos(2 pi k s) + B_k sin(2 pi k s))``.

    ``cos_coeffs`` and ``sin_coeffs`` have shape (K, 3) for harmonics 1..K.
    """

    def __init__(self, center, cos_coeffs, sin_coeffs):
        self.center = np.asarray(center, dtype=float)
        self.cos_coeffs = np.atleast_2d(np.asarray(cos_coeffs, dtype=float))
        self.sin_coeffs = np.atleast_2d(np.asarray(sin_coeffs, dtype=float))
        if self.cos_coeffs.shape != self.sin_coeffs.shape or self.cos_coeffs.shape[1] != 3:
            raise InvalidInputError("Fourier coefficients must both have shape (K, 3)")
        self.panels = max(32, 16 * self.cos_coeffs.shape[0])

    def _phases(self, s):
        k = np.arange(1, self.cos_coeffs.shape[0] + 1)
        return TWO_PI * np.multiply.outer(k, np.asarray(s, dtype=float)), k

    def points(self, s):
        ph, _ = self._phases(s)
        return (self.center.reshape(3, *([1] * np.ndim(s)))
                + np.tensordot(self.cos_coeffs.T, np.cos(ph), axes=1)
                + np.tensordot(self.sin_coeffs.T, np.sin(ph), axes=1))

    def tangent(self, s):
        ph, k = self._phases(s)
        kk = (TWO_PI * k).reshape(-1, *([1] * np.ndim(s)))
        return (np.tensordot(self.sin_coeffs.T, kk * np.cos(ph), axes=1)
                - np.tensordot(self.cos_coeffs.T, kk * np.sin(ph), axes=1))

    def describe(self):
        return {"kind": "fourier", "center": self.center.tolist(),
                "cos": self.cos_coeffs.tolist(), "sin": self.sin_coeffs.tolist()}


class ConstantPath(LoopPath):
    """Degenerate loop sitting at one point."""

    panels = 1

    def __init__(self, point):
        self.point = np.asarray(point, dtype=float)

    def points(self, s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(self.point.reshape(3, *([1] * s.ndim)),
                               (3,) + s.shape).copy()

    def tangent(self, s):
        s = np.asarray(s, dtype=float)
        return np.zeros((3,) + s.shape)

    def describe(self):
        return {"kind": "point", "point": self.point.tolist()}


class NodePath(LoopPath):
    """Periodic cubic spline through user nodes.

    The nodes must be closed explicitly (last node equal to the first).
    With ``params`` (strictly increasing from 0 to 1) the spline is taken
    in that parameter, with knots at the nodes.  Otherwise the curve is
    resampled uniformly in chord length to at least ``min_nodes`` nodes
    and re-splined, so that the parameter is close to normalized arc
    length.
    """

    def __init__(self, nodes, params=None, min_nodes=MIN_SPLINE_NODES):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 3 or nodes.shape[0] < 2:
            raise InvalidInputError("nodes must have shape (N, 3), N >= 2")
        if not np.all(np.isfinite(nodes)):
            raise InvalidInputError("nodes must be finite")
        scale = max(1.0, float(np.abs(nodes).max()))
        if np.max(np.abs(nodes[0] - nodes[-1])) > 1e-12 * scale:
            raise GeometryError("path is not closed: first and last nodes differ")
        self.user_nodes = nodes
        nodes = nodes.copy()
        nodes[-1] = nodes[0]
        if params is not None:
            u = np.asarray(params, dtype=float)
            if u.shape != (nodes.shape[0],) or np.any(np.diff(u) <= 0) or \
                    u[0] != 0.0 or u[-1] != 1.0:
                raise InvalidInputError("params must increase strictly from 0 to 1, one per node")
            if nodes.shape[0] < 3:
                raise GeometryError("path has zero length; use a point loop")
            self.spline = CubicSpline(u, nodes, bc_type="periodic")
            self.params = u
            self.panels = nodes.shape[0] - 1
            return
        self.params = None
        first = self._chord_spline(nodes)
        if first is None:
            raise GeometryError("path has zero length; use a point loop")
        n = max(int(min_nodes), nodes.shape[0])
        u = np.linspace(0.0, 1.0, n + 1)
        resampled = first(u)
        resampled[-1] = resampled[0]
        self.spline = self._chord_spline(resampled)
        self.panels = n

    @staticmethod
    def _chord_spline(nodes):
        seg = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
        keep = np.concatenate([[True], seg > 0])
        nodes = nodes[keep]
        seg = seg[seg > 0]
        if seg.size < 2:
            return None
        t = np.concatenate([[0.0], np.cumsum(seg)])
        t /= t[-1]
        return CubicSpline(t, nodes, bc_type="periodic")

    def points(self, s):
        s = np.mod(np.asarray(s, dtype=float), 1.0)
        return np.moveaxis(self.spline(s), -1, 0)

    def tangent(self, s):
        s = np.mod(np.asarray(s, dtype=float), 1.0)
        return np.moveaxis(self.spline(s, 1), -1, 0)

    def breakpoints(self):
        return np.asarray(self.spline.x)

    def describe(self):
        out = {"kind": "nodes", "nodes": self.user_nodes.tolist()}
        if self.params is not None:
            out["params"] = self.params.tolist()
        return out


# ---------------------------------------------------------------------------
# Spanning surfaces
# ---------------------------------------------------------------------------

def _grid_triangles(t_edges, s_edges):
    """Split the rectangles of a tensor grid into two triangles each."""
    tris = []
    for t0, t1 in zip(t_edges[:-1], t_edges[1:]):
        for s0, s1 in zip(s_edges[:-1], s_edges[1:]):
            tris.append([[t0, s0], [t1, s0], [t1, s1]])
            tris.append([[t0, s0], [t1, s1], [t0, s1]])
    return np.array(tris)


def _panel_edges(path):
    # panels end at the path's breakpoints so that every triangle is smooth
    return path.breakpoints()


class SpanningSurface:
    """Base class for surfaces spanning a path."""

    kind = "surface"

    def evaluate(self, t, s):
        """Return ``(X, X_t, X_s)`` each of shape (3, n)."""
        raise NotImplementedError

    def initial_triangles(self):
        raise NotImplementedError

    def min_discriminant(self):
        raise NotImplementedError


class FanSurface(SpanningSurface):
    """Cone over the path from an apex (the centroid by default)."""

    kind = "planar-fan"

    def __init__(self, path, apex=None):
        self.path = path
        self.apex = path.centroid() if apex is None else np.asarray(apex, dtype=float)

    def evaluate(self, t, s):
        t = np.asarray(t, dtype=float)
        p = self.path.points(s)
        d = p - self.apex[:, None]
        return self.apex[:, None] + t * d, d, t * self.path.tangent(s)

    def initial_triangles(self):
        # Rows graded toward the rim, where the discriminant is smallest:
        # its square root is concave and the apex lies inside the cone.
        t = np.concatenate([[0.0], 1.0 - 0.5 ** np.arange(1, 21), [1.0]])
        return _grid_triangles(t, _panel_edges(self.path))

    def min_discriminant(self, n_rays=4096):
        """Exact minimum along each ray (the discriminant is quadratic in t)."""
        s = np.linspace(0.0, 1.0, n_rays, endpoint=False)
        a = self.apex[:, None]
        d = self.path.points(s) - a
        d0 = discriminant(a)[0]
        b = 0.5 * (a[0] * d[2] + a[2] * d[0]) - a[1] * d[1]
        dd = discriminant(d)
        cand = [np.full(n_rays, d0), d0 + 2.0 * b + dd]
        with np.errstate(divide="ignore", invalid="ignore"):
            tv = np.where(dd != 0, -b / dd, 0.0)
        inside = (tv > 0) & (tv < 1)
        cand.append(np.where(inside, d0 + 2.0 * b * tv + dd * tv * tv, np.inf))
        return float(np.min(cand))


class HyperbolicCapSurface(SpanningSurface):
    """Cap of the hyperboloid ``alpha gamma - beta^2 = omega^2``."""

    kind = "analytic-cap"

    def __init__(self, path):
        if not isinstance(path, HyperbolicCapPath):
            raise InvalidInputError("analytic cap exists only for the hyperbolic-cap family")
        self.path = path

    def evaluate(self, t, s):
        om, chi = self.path.omega, self.path.chi
        r = chi * np.asarray(t, dtype=float)
        phi = TWO_PI * np.asarray(s, dtype=float)
        ch, sh = np.cosh(r), np.sinh(r)
        c, sn = np.cos(phi), np.sin(phi)
        x = om * np.array([ch + sh * c, sh * sn, ch - sh * c])
        xt = chi * om * np.array([sh + ch * c, ch * sn, sh - ch * c])
        xs = TWO_PI * om * np.array([-sh * sn, sh * c, sh * sn])
        return x, xt, xs

    def initial_triangles(self):
        return _grid_triangles(np.array([0.0, 0.5, 1.0]), np.linspace(0, 1, 33))

    def min_discriminant(self):
        return self.path.omega ** 2


class ReversedSurface(SpanningSurface):
    """Surface of the reversed loop: ``s -> 1 - s`` flips the orientation."""

    def __init__(self, base):
        self.base = base
        self.kind = base.kind

    def evaluate(self, t, s):
        x, xt, xs = self.base.evaluate(t, 1.0 - np.asarray(s, dtype=float))
        return x, xt, -xs

    def initial_triangles(self):
        tri = self.base.initial_triangles().copy()
        tri[..., 1] = 1.0 - tri[..., 1]
        return tri[:, ::-1, :]

    def min_discriminant(self):
        return self.base.min_discriminant()


# ---------------------------------------------------------------------------
# Loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParameterLoop:
    """Closed path with a spanning surface.

    Parameters
    ----------
    path : LoopPath
    surface : SpanningSurface
    probe : bool
        Allow the surface to reach the critical set (singularity probes).
    """

    path: LoopPath
    surface: SpanningSurface
    probe: bool = False
    min_discriminant: float = field(init=False)

    def __post_init__(self):
        p0 = self.path.points(np.array([0.0]))[:, 0]
        p1 = self.path.points(np.array([1.0]))[:, 0]
        if not np.all(np.isfinite(p0)):
            raise InvalidInputError("path is not finite")
        if np.max(np.abs(p0 - p1)) > 1e-12 * max(1.0, float(np.abs(p0).max())):
            raise GeometryError("path is not closed: path(0) != path(1)")
        mind = float(self.surface.min_discriminant())
        object.__setattr__(self, "min_discriminant", mind)
        if not self.probe and not mind > 0:
            raise SingularityError("spanning surface touches the critical set",
                                   discriminant=mind,
                                   region=f"min discriminant {mind!r}")

    def reversed(self):
        return ParameterLoop(self.path.reversed(), ReversedSurface(self.surface),
                             probe=self.probe)

    def points(self, s):
        return self.path.points(s)

    def frequency_range(self, n=2048):
        s = np.linspace(0.0, 1.0, n, endpoint=False)
        disc = discriminant(self.path.points(s))
        if np.any(disc <= 0):
            raise SingularityError("loop reaches the critical set",
                                   discriminant=float(disc.min()))
        w = np.sqrt(disc)
        return float(w.min()), float(w.max())

    def describe(self):
        return {"path": self.path.describe(), "surface": self.surface.kind,
                "min_discriminant": self.min_discriminant}


def make_loop(path, surface="planar-fan", probe=False):
    """Build a loop from a path and a surface policy name."""
    if isinstance(surface, SpanningSurface):
        surf = surface
    elif surface == "planar-fan":
        surf = FanSurface(path)
    elif surface == "analytic-cap":
        surf = HyperbolicCapSurface(path)
    else:
        raise InvalidInputError(f"unknown surface policy {surface!r}")
    return ParameterLoop(path, surf, probe=probe)


def hyperbolic_cap_loop(omega=1.0, chi=0.5, surface="analytic-cap"):
    return make_loop(HyperbolicCapPath(omega, chi), surface)


def circle_loop(center, e1, e2, radius, probe=False):
    return make_loop(CirclePath(center, e1, e2, radius), "planar-fan", probe=probe)


def critical_approach_loop(eps, kappa=2.0, probe=False):
    """Circle in the plane alpha + gamma = 2 kappa with minimum discriminant eps.

    ``alpha = kappa + R cos, gamma = kappa - R cos, beta = R sin`` with
    ``R = sqrt(kappa^2 - eps)``; its flat disk has discriminant
    ``kappa^2 - r^2 >= eps``.
    """
    if not 0 < eps <= kappa ** 2:
        raise InvalidInputError("need 0 < eps <= kappa^2")
    radius = np.sqrt(kappa ** 2 - eps)
    if radius == 0:
        return point_loop([kappa, 0.0, kappa])
    return circle_loop([kappa, 0.0, kappa], [1.0, 0.0, -1.0], [0.0, 1.0, 0.0],
                       radius, probe=probe)


def fourier_loop(center, cos_coeffs, sin_coeffs, surface="planar-fan"):
    return make_loop(FourierPath(center, cos_coeffs, sin_coeffs), surface)


def node_loop(nodes, surface="planar-fan", probe=False, params=None):
    nodes = np.asarray(nodes, dtype=float)
    scale = max(1.0, float(np.abs(nodes).max())) if nodes.size else 1.0
    if nodes.ndim == 2 and nodes.shape[1] == 3 and nodes.shape[0] >= 1 and \
            np.max(np.abs(nodes - nodes[0])) <= 1e-12 * scale:
        return point_loop(nodes[0])
    return make_loop(NodePath(nodes, params), surface, probe=probe)


def point_loop(point):
    path = ConstantPath(point)
    return ParameterLoop(path, FanSurface(path, apex=np.asarray(point, dtype=float)))


def random_stable_loop(rng, min_disc=0.25, harmonics=2, amplitude=0.4, max_tries=1000):
    """Random smooth Fourier loop whose fan surface keeps ``disc >= min_disc``."""
    for _ in range(max_tries):
        k = rng.uniform(1.0, 2.0)
        center = np.array([k * rng.uniform(0.8, 1.25), rng.uniform(-0.3, 0.3),
                           k * rng.uniform(0.8, 1.25)])
        cs = rng.normal(scale=amplitude, size=(harmonics, 3)) / np.arange(1, harmonics + 1)[:, None]
        sn = rng.normal(scale=amplitude, size=(harmonics, 3)) / np.arange(1, harmonics + 1)[:, None]
        path = FourierPath(center, cs, sn)
        surf = FanSurface(path)
        if surf.min_discriminant() >= min_disc:
            return ParameterLoop(path, surf)
    raise GeometryError("could not draw a loop with the requested discriminant")
