"""Generalized harmonic oscillator H = (alpha q^2 + 2 beta p q + gamma p^2) / 2.

Action-angle charts
-------------------
The primary chart uses the gamma-based amplitude::

    q = A cos(theta)
    p = -A ((beta/gamma) cos(theta) + (omega/gamma) sin(theta))
    A = sqrt(2 gamma I / omega)

The mirrored chart exchanges the roles of ``q`` and ``p`` and uses the
alpha-based amplitude::

    p = B cos(theta)
    q = B (-(beta/alpha) cos(theta) + (omega/alpha) sin(theta))
    B = sqrt(2 alpha I / omega)

In both charts ``theta`` advances at ``omega`` and ``E = I omega``.  The
two angles differ by a parameter-dependent offset.  In the negative cone
(alpha, gamma < 0) the energy is negative and the action is returned
signed, ``I = E / omega``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ChartError, InvalidInputError, UnstableRegimeError

# Relative tolerance used to classify a discriminant as critical.
CRITICAL_RTOL = 1e-12


@dataclass(frozen=True)
class OscillatorParams:
    """Point (alpha, beta, gamma) in oscillator parameter space."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not np.isfinite(v) or np.iscomplexobj(v):
                raise InvalidInputError(f"{name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))

    @property
    def discriminant(self):
        return self.alpha * self.gamma - self.beta ** 2

    @property
    def scale(self):
        return max(abs(self.alpha), abs(self.beta), abs(self.gamma))

    @property
    def stability(self):
        """``'stable'``, ``'critical'`` or ``'unstable'``."""
        disc = self.discriminant
        if abs(disc) <= CRITICAL_RTOL * self.scale ** 2:
            return "critical"
        return "stable" if disc > 0 else "unstable"

    def as_array(self):
        return np.array([self.alpha, self.beta, self.gamma])

    def negated(self):
        return OscillatorParams(-self.alpha, -self.beta, -self.gamma)

    def energy(self, q, p):
        return 0.5 * (self.alpha * q * q + 2.0 * self.beta * p * q + self.gamma * p * p)


@dataclass(frozen=True)
class ActionAngleState:
    action: float
    angle: float


def frequency(params):
    """Oscillation frequency ``sqrt(alpha gamma - beta^2)``.

    Raises
    ------
    UnstableRegimeError
        If the discriminant is negative beyond round-off.
    """
    disc = params.discriminant
    if params.stability == "critical":
        return 0.0
    if disc < 0:
        raise UnstableRegimeError(
            f"negative discriminant {disc!r}: oscillator is unstable",
            discriminant=disc,
        )
    return float(np.sqrt(disc))


def choose_chart(params):
    """Gamma chart unless gamma is small relative to the other parameters."""
    if abs(params.gamma) < 0.1 * params.scale:
        return "alpha"
    return "gamma"


def _stable_omega(params, chart):
    omega = frequency(params)
    if omega <= 0.0:
        raise UnstableRegimeError("action-angle chart needs a stable oscillator",
                                  discriminant=params.discriminant)
    pivot = params.gamma if chart == "gamma" else params.alpha
    if pivot == 0.0:
        raise ChartError(f"{chart} chart undefined: {chart} = 0")
    return omega


def action_angle_to_pq(state, params, chart="gamma"):
    """Map (I, theta) to the canonical pair (q, p)."""
    if chart == "auto":
        chart = choose_chart(params)
    omega = _stable_omega(params, chart)
    a, b, g = params.alpha, params.beta, params.gamma
    c, s = np.cos(state.angle), np.sin(state.angle)
    if chart == "gamma":
        amp2 = 2.0 * g * state.action / omega
        if amp2 < 0:
            raise InvalidInputError("action sign must match the sign of gamma")
        amp = np.sqrt(amp2)
        return amp * c, -amp * ((b / g) * c + (omega / g) * s)
    if chart == "alpha":
        amp2 = 2.0 * a * state.action / omega
        if amp2 < 0:
            raise InvalidInputError("action sign must match the sign of alpha")
        amp = np.sqrt(amp2)
        return amp * (-(b / a) * c + (omega / a) * s), amp * c
    raise InvalidInputError(f"unknown chart {chart!r}")


def pq_to_action_angle(q, p, params, chart="gamma"):
    """Inverse of :func:`action_angle_to_pq`; vectorized over ``q`` and ``p``.

    Returns ``(I, theta)`` with ``theta`` in (-pi, pi] and ``I`` signed.
    """
    if chart == "auto":
        chart = choose_chart(params)
    omega = _stable_omega(params, chart)
    a, b, g = params.alpha, params.beta, params.gamma
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    action = params.energy(q, p) / omega
    if chart == "gamma":
        theta = np.arctan2(-(b * q + g * p) / omega, q)
    elif chart == "alpha":
        theta = np.arctan2((a * q + b * p) / omega, p)
    else:
        raise InvalidInputError(f"unknown chart {chart!r}")
    if theta.ndim == 0:
        return float(action), float(theta)
    return action, theta


def hamilton_rhs(params, q, p):
    """Hamilton's equations ``(dq/dz, dp/dz)``."""
    return (params.beta * q + params.gamma * p,
            -(params.alpha * q + params.beta * p))
