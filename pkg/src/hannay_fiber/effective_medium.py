"""Effective permittivity and third-order susceptibility of composites.

The self-consistent (Bruggeman) condition for inclusions of permittivity
eps1 at volume fraction f in a host eps2, with depolarization factor g::

    f (eps1 - e) / (e + g (eps1 - e)) + (1 - f) (eps2 - e) / (e + g (eps2 - e)) = 0

clears to the quadratic ``(1 - g) e^2 - u e - g eps1 eps2 = 0`` with
``u = (f - g) eps1 + (1 - g - f) eps2``.  The product of its roots is
negative, so exactly one root is positive.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (InternalConsistencyError, InvalidInputError,
                     TensorSymmetryError, UndefinedQuantityError)

FD_REL_STEP = 1e-3
DERIVATIVE_RTOL = 1e-8


def _positive(name, v):
    if isinstance(v, complex) or np.iscomplexobj(v):
        raise InvalidInputError(f"{name} must be real (lossy media are not supported)")
    v = float(v)
    if not (math.isfinite(v) and v > 0):
        raise InvalidInputError(f"{name} must be finite and positive, got {v!r}")
    return v


def _fraction(f):
    if isinstance(f, complex) or np.iscomplexobj(f):
        raise InvalidInputError("f must be real")
    f = float(f)
    if not (0.0 <= f <= 1.0):
        raise InvalidInputError(f"volume fraction must lie in [0, 1], got {f!r}")
    return f


def _depolarization(g):
    g = float(g)
    if not (0.0 < g < 1.0):
        raise InvalidInputError(f"depolarization factor must lie in (0, 1), got {g!r}")
    return g


@dataclass(frozen=True)
class IsotropicCompositeSpec:
    eps1: float
    eps2: float
    f: float
    chi: float = 1.0
    g: float = 1.0 / 3.0

    def __post_init__(self):
        object.__setattr__(self, "eps1", _positive("eps1", self.eps1))
        object.__setattr__(self, "eps2", _positive("eps2", self.eps2))
        object.__setattr__(self, "f", _fraction(self.f))
        object.__setattr__(self, "g", _depolarization(self.g))
        if isinstance(self.chi, complex) or not math.isfinite(float(self.chi)):
            raise InvalidInputError("chi must be a finite real")
        object.__setattr__(self, "chi", float(self.chi))


@dataclass(frozen=True)
class UniaxialInclusionSpec:
    """Uniaxial crystallites with optic axis along (theta, phi)."""

    eps_perp: float
    eps_par: float
    theta: float
    phi: float
    f: float
    eps_host: float
    g: float = 1.0 / 3.0

    def __post_init__(self):
        for name in ("eps_perp", "eps_par", "eps_host"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))
        object.__setattr__(self, "f", _fraction(self.f))
        object.__setattr__(self, "g", _depolarization(self.g))
        theta, phi = float(self.theta), float(self.phi)
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise InvalidInputError("orientation angles must be finite")
        # fold onto theta in [0, pi], phi in [0, 2 pi): the axis direction
        theta = math.fmod(theta, 2.0 * math.pi)
        if theta < 0:
            theta += 2.0 * math.pi
        if theta > math.pi:
            theta = 2.0 * math.pi - theta
            phi += math.pi
        phi = math.fmod(phi, 2.0 * math.pi)
        if phi < 0:
            phi += 2.0 * math.pi
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @property
    def alignment(self):
        """``'z'`` or ``'x'`` for the two aligned cases, else None."""
        tol = 1e-12
        st = math.sin(self.theta)
        if abs(st) <= tol:
            return "z"
        if abs(math.cos(self.theta)) <= tol and abs(math.sin(self.phi)) <= tol:
            return "x"
        return None


# ---------------------------------------------------------------------------
# Scalar self-consistent solution
# ---------------------------------------------------------------------------

def _positive_root(eps1, eps2, f, g):
    """Positive root of ``(1 - g) e^2 - u e - g eps1 eps2 = 0`` without cancellation."""
    u = (f - g) * eps1 + (1.0 - g - f) * eps2
    root = math.sqrt(u * u + 4.0 * g * (1.0 - g) * eps1 * eps2)
    if u >= 0:
        e = (u + root) / (2.0 * (1.0 - g))
    else:
        e = 2.0 * g * eps1 * eps2 / (root - u)
    if not (e > 0 and math.isfinite(e)):
        raise InternalConsistencyError(f"no positive root (u={u!r})")
    return e, u, root


def bruggeman_residual(eps_e, eps1, eps2, f, g=1.0 / 3.0):
    """Cleared self-consistency residual, normalized by ``max(eps1, eps2)^2``."""
    t1 = f * (eps1 - eps_e) * (eps_e + g * (eps2 - eps_e))
    t2 = (1.0 - f) * (eps2 - eps_e) * (eps_e + g * (eps1 - eps_e))
    return abs(t1 + t2) / max(eps1, eps2) ** 2


def emt_isotropic(spec):
    """Effective permittivity for spherical inclusions (g = 1/3)."""
    if abs(spec.g - 1.0 / 3.0) > 1e-15:
        raise InvalidInputError("emt_isotropic requires g = 1/3; use emt_general_g")
    e1, e2, f = spec.eps1, spec.eps2, spec.f
    u = (3.0 * f - 1.0) * e1 + (2.0 - 3.0 * f) * e2
    root = math.sqrt(u * u + 8.0 * e1 * e2)
    if u >= 0:
        return 0.25 * (u + root)
    # same root, rationalized to avoid cancellation
    return 2.0 * e1 * e2 / (root - u)


def emt_general_g(spec):
    """Effective permittivity for an arbitrary depolarization factor."""
    e, _, _ = _positive_root(spec.eps1, spec.eps2, spec.f, spec.g)
    return e


def d_eps_e_d_eps1(eps1, eps2, f, g=1.0 / 3.0):
    """Analytic ``d eps_e / d eps1`` by implicit differentiation."""
    e, u, root = _positive_root(eps1, eps2, f, g)
    # d/d eps1 of (1-g) e^2 - u e - g eps1 eps2 = 0, with du/deps1 = f - g;
    # the e-derivative 2 (1-g) e - u equals the square root
    return ((f - g) * e + g * eps2) / root


def d_eps_e_d_eps1_fd(eps1, eps2, f, g=1.0 / 3.0, rel_step=FD_REL_STEP):
    """Five-point central difference (fourth order) of the root in ``eps1``."""
    h = rel_step * eps1

    def e(x):
        return _positive_root(x, eps2, f, g)[0]
    return (8.0 * (e(eps1 + h) - e(eps1 - h)) - (e(eps1 + 2.0 * h) - e(eps1 - 2.0 * h))) / (12.0 * h)


def checked_derivative(eps1, eps2, f, g=1.0 / 3.0):
    """Analytic derivative, cross-checked against central differences.

    The two must agree to ``DERIVATIVE_RTOL`` relative, on top of the
    round-off floor of the difference quotient (``~ 10 eps eps_e / h``).
    """
    d = d_eps_e_d_eps1(eps1, eps2, f, g)
    d_fd = d_eps_e_d_eps1_fd(eps1, eps2, f, g)
    e, _, _ = _positive_root(eps1, eps2, f, g)
    floor = 10.0 * np.finfo(float).eps * e / (FD_REL_STEP * eps1)
    if abs(d - d_fd) > DERIVATIVE_RTOL * max(abs(d), abs(d_fd)) + floor:
        raise InternalConsistencyError(
            f"analytic and finite-difference derivatives disagree: {d!r} vs {d_fd!r}")
    return d


def chi3_effective_isotropic(spec):
    """Effective chi3 ``(1/f) D |D| chi`` with ``D = d eps_e / d eps1``."""
    if spec.f == 0:
        raise UndefinedQuantityError("effective chi3 undefined without inclusions (f = 0)")
    d = checked_derivative(spec.eps1, spec.eps2, spec.f, spec.g)
    return d * abs(d) * spec.chi / spec.f


def field_moment(derivative, f, field):
    """Mean-square local field in the inclusions, ``(1/f) D E^2``."""
    if f == 0:
        raise UndefinedQuantityError("field moment undefined without inclusions (f = 0)")
    return derivative * field ** 2 / f


# ---------------------------------------------------------------------------
# Uniaxial inclusions
# ---------------------------------------------------------------------------

def rotate_dielectric_tensor(spec):
    """Dielectric tensor of a crystallite whose optic axis points along (theta, phi)."""
    t, p = spec.theta, spec.phi
    ep, ea = spec.eps_perp, spec.eps_par
    da = ea - ep
    st2, s2t = math.sin(t) ** 2, math.sin(2.0 * t)
    m = np.array([
        [math.cos(p) ** 2 * st2, -0.5 * math.sin(2.0 * p) * st2, 0.5 * math.cos(p) * s2t],
        [-0.5 * math.sin(2.0 * p) * st2, math.sin(p) ** 2 * st2, -0.5 * math.sin(p) * s2t],
        [0.5 * math.cos(p) * s2t, -0.5 * math.sin(p) * s2t, math.cos(t) ** 2],
    ])
    return ep * np.eye(3) + da * m


def emt_uniaxial_aligned(spec):
    """Principal effective permittivities ``(eps_x, eps_y, eps_z)`` for aligned inclusions."""
    axis = spec.alignment
    if axis is None:
        raise InvalidInputError(
            "only inclusions aligned with z or x are supported (theta = 0, or theta = pi/2 with phi = 0)")
    e_perp, _, _ = _positive_root(spec.eps_perp, spec.eps_host, spec.f, spec.g)
    e_par, _, _ = _positive_root(spec.eps_par, spec.eps_host, spec.f, spec.g)
    if axis == "z":
        return e_perp, e_perp, e_par
    return e_par, e_perp, e_perp


def uniaxial_derivatives(spec):
    """``d eps_i^e / d eps_i`` for i = x, y, z (analytic, cross-checked)."""
    axis = spec.alignment
    if axis is None:
        raise InvalidInputError("only inclusions aligned with z or x are supported")
    dp = checked_derivative(spec.eps_perp, spec.eps_host, spec.f, spec.g)
    da = checked_derivative(spec.eps_par, spec.eps_host, spec.f, spec.g)
    return (dp, dp, da) if axis == "z" else (da, dp, dp)


def uniaxial_residuals(spec):
    """Self-consistency residual of each principal component."""
    ex, ey, ez = emt_uniaxial_aligned(spec)
    inc = (spec.eps_perp, spec.eps_perp, spec.eps_par) if spec.alignment == "z" else \
        (spec.eps_par, spec.eps_perp, spec.eps_perp)
    return tuple(bruggeman_residual(e, i, spec.eps_host, spec.f, spec.g)
                 for e, i in zip((ex, ey, ez), inc))


# ---------------------------------------------------------------------------
# Tetragonal chi3 tensors
# ---------------------------------------------------------------------------

TETRAGONAL_COMPONENTS = ("xxxx", "xxyy", "xyxy", "xyyx", "yyxy", "yxyy", "xyyy", "xxxy")

# (derived, source, sign) pairs generating the remaining eight elements
TETRAGONAL_RELATIONS = (
    ("yyxx", "xxyy", 1.0),
    ("yxyx", "xyxy", 1.0),
    ("yxxy", "xyyx", 1.0),
    ("yyyy", "xxxx", 1.0),
    ("xxyx", "yyxy", -1.0),
    ("xyxx", "yxyy", -1.0),
    ("yxxx", "xyyy", -1.0),
    ("yyyx", "xxxy", -1.0),
)

_AXIS = {"x": 0, "y": 1, "z": 2}


def _index(label):
    return tuple(_AXIS[ch] for ch in label)


@dataclass(frozen=True)
class Chi3TensorTetragonal:
    """Eight independent transverse components of a tetragonal chi3 tensor."""

    xxxx: float = 0.0
    xxyy: float = 0.0
    xyxy: float = 0.0
    xyyx: float = 0.0
    yyxy: float = 0.0
    yxyy: float = 0.0
    xyyy: float = 0.0
    xxxy: float = 0.0

    def __post_init__(self):
        for name in TETRAGONAL_COMPONENTS:
            v = getattr(self, name)
            if isinstance(v, complex) or not math.isfinite(float(v)):
                raise InvalidInputError(f"{name} must be a finite real")
            object.__setattr__(self, name, float(v))

    def as_dict(self):
        return {name: getattr(self, name) for name in TETRAGONAL_COMPONENTS}

    def full(self, dim=3):
        """Full tensor of shape (dim,)*4 (dim 2 for the transverse block)."""
        t = np.zeros((dim,) * 4)
        for name in TETRAGONAL_COMPONENTS:
            t[_index(name)] = getattr(self, name)
        for derived, source, sign in TETRAGONAL_RELATIONS:
            t[_index(derived)] = sign * getattr(self, source)
        return t

    def component(self, label):
        return float(self.full(2)[_index(label)])

    def scaled(self, k):
        return Chi3TensorTetragonal(**{n: k * v for n, v in self.as_dict().items()})

    def rotated(self, psi):
        """Tensor of the crystallite rotated by ``psi`` about the z axis."""
        return Chi3TensorTetragonal.from_full(rotate_chi3(self.full(2), psi))

    @classmethod
    def from_full(cls, tensor, rtol=1e-12):
        """Extract the independent components, validating the symmetry relations."""
        t = np.asarray(tensor, dtype=float)
        broken = tetragonal_violations(t, rtol=rtol)
        if broken:
            raise TensorSymmetryError(
                f"tensor breaks tetragonal relation {broken[0]}", relation=broken[0])
        return cls(**{name: float(t[_index(name)]) for name in TETRAGONAL_COMPONENTS})


def tetragonal_violations(tensor, rtol=1e-12):
    """Names of tetragonal relations the tensor breaks (empty if none)."""
    t = np.asarray(tensor)
    scale = max(1.0, float(np.max(np.abs(t)))) if t.size else 1.0
    out = []
    for derived, source, sign in TETRAGONAL_RELATIONS:
        if abs(t[_index(derived)] - sign * t[_index(source)]) > rtol * scale:
            op = "=" if sign > 0 else "= -"
            out.append(f"{derived} {op} {source}")
    if t.shape[0] == 2:
        return out
    # transverse block only: any component with a z index must vanish
    mask = np.ones(t.shape, dtype=bool)
    mask[:2, :2, :2, :2] = False
    if np.any(np.abs(t[mask]) > rtol * scale):
        out.append("no z-index components")
    return out


def rotate_chi3(tensor, psi):
    """Rotate a rank-4 tensor by ``psi`` about the z axis."""
    t = np.asarray(tensor, dtype=float)
    c, s = math.cos(psi), math.sin(psi)
    r = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])[: t.shape[0], : t.shape[0]]
    return np.einsum("ia,jb,kc,ld,abcd->ijkl", r, r, r, r, t)


@dataclass(frozen=True)
class AnisotropicChi3Result:
    """Effective chi3 from the decoupling approximation.

    ``tensor`` is the full 3x3x3x3 result, complex only when some
    ``D_i D_j`` product is negative (listed in ``negative_pairs``).
    ``tetragonal`` is set when the result keeps the tetragonal structure.
    """

    tensor: np.ndarray
    tetragonal: object
    broken_relations: tuple
    negative_pairs: tuple


def chi3_effective_anisotropic(chi, derivatives, f):
    """Component-wise ``chi_ijkl / f * sqrt(D_i D_j |D_k D_l|)``.

    Parameters
    ----------
    chi : Chi3TensorTetragonal or array_like
        Inclusion tensor; arrays may be 2x2x2x2 or 3x3x3x3.
    derivatives : sequence of float
        ``(D_x, D_y, D_z)`` with ``D_i = d eps_i^e / d eps_i``; ``D_z`` may be
        omitted for transverse tensors.
    f : float
    """
    if f == 0:
        raise UndefinedQuantityError("effective chi3 undefined without inclusions (f = 0)")
    d = np.asarray(derivatives, dtype=float)
    if isinstance(chi, Chi3TensorTetragonal):
        t = chi.full(2 if d.size == 2 else 3)
    else:
        t = np.asarray(chi, dtype=float)
    if t.ndim != 4 or d.size < t.shape[0]:
        raise InvalidInputError("need one derivative per tensor axis")
    if not np.all(np.isfinite(d)):
        raise InvalidInputError("derivatives must be finite")
    n = t.shape[0]
    d = d[:n]
    ij = np.multiply.outer(d, d)
    kl = np.abs(ij)
    prod = np.multiply.outer(ij, kl)
    negative = tuple(sorted({(int(i), int(j)) for i, j in zip(*np.nonzero(ij < 0))}))
    if negative:
        factor = np.emath.sqrt(prod)
    else:
        factor = np.sqrt(prod)
    out = t * factor / f
    broken = ()
    tet = None
    if not negative:
        full3 = np.zeros((3,) * 4)
        full3[(slice(0, n),) * 4] = out
        broken = tuple(tetragonal_violations(full3))
        if not broken:
            tet = Chi3TensorTetragonal.from_full(full3)
    return AnisotropicChi3Result(tensor=out, tetragonal=tet, broken_relations=broken,
                                 negative_pairs=negative)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("f", "eps_e", "d_eps_d_eps1", "chi_e", "residual")


def sweep_rows(eps1, eps2, f_values, chi=1.0, g=1.0 / 3.0):
    """Rows (f, eps_e, dEps/dEps1, chi_e, residual) over a volume-fraction grid."""
    rows = []
    for f in f_values:
        spec = IsotropicCompositeSpec(eps1, eps2, f, chi, g)
        e = emt_general_g(spec)
        d = checked_derivative(eps1, eps2, spec.f, g)
        chi_e = chi3_effective_isotropic(spec) if spec.f > 0 else float("nan")
        rows.append((spec.f, e, d, chi_e, bruggeman_residual(e, eps1, eps2, spec.f, g)))
    return rows
