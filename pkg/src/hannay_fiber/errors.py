"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
2 for bad configuration or input, 3 for numerical failures and 4 for
singularity or geometry problems.
"""


class HannayFiberError(Exception):
    """Base class for all package errors."""

    exit_code = 1


# -- input / configuration (exit 2) ---------------------------------------

class InvalidInputError(HannayFiberError, ValueError):
    """Non-finite, out-of-range or otherwise malformed input."""

    exit_code = 2


class ConfigError(InvalidInputError):
    """Malformed or inconsistent configuration file."""


class StructureViolationError(InvalidInputError):
    """Coefficients that do not derive from a Hamiltonian.

    Parameters
    ----------
    message : str
    relation : str
        The relation that failed, e.g. ``"d = -c"``.
    """

    def __init__(self, message, relation=None):
        super().__init__(message)
        self.relation = relation


class TensorSymmetryError(StructureViolationError):
    """A susceptibility tensor breaks a tetragonal symmetry relation."""


class ClosureError(InvalidInputError):
    """A fiber profile that does not return to its starting material."""


# -- numerical (exit 3) ----------------------------------------------------

class NumericalError(HannayFiberError):
    """Base class for numerical failures, optionally located at ``z``."""

    exit_code = 3

    def __init__(self, message, z=None):
        if z is not None:
            message = f"{message} (at z={z!r})"
        super().__init__(message)
        self.z = z


class StiffnessError(NumericalError):
    """Step size underflow in the integrator."""


class DivergenceError(NumericalError):
    """The state became non-finite."""


class PhaseUndefinedError(NumericalError):
    """An amplitude vanished, so its phase is undefined."""


class ResolutionError(NumericalError):
    """Grid or sampling too coarse for the requested tolerance."""


class NonlinearityBreachError(NumericalError):
    """Adiabatic trajectory left the linearization neighborhood."""


class InternalConsistencyError(NumericalError):
    """A self-check (residual, dual derivative) failed."""


class UndefinedQuantityError(InvalidInputError):
    """Quantity undefined for the given input, e.g. a zero volume fraction."""


# -- singularity / geometry (exit 4) ---------------------------------------

class GeometryError(HannayFiberError, ValueError):
    """Invalid loop or surface geometry."""

    exit_code = 4


class SingularityError(GeometryError):
    """Evaluation at or beyond the critical surface.

    Parameters
    ----------
    message : str
    discriminant : float, optional
        Smallest discriminant encountered.
    region : str, optional
        Human-readable description of the offending region.
    """

    def __init__(self, message, discriminant=None, region=None):
        if region is not None:
            message = f"{message} [{region}]"
        super().__init__(message)
        self.discriminant = discriminant
        self.region = region


class UnstableRegimeError(SingularityError):
    """Oscillator parameters with negative discriminant."""


class ChartError(GeometryError):
    """The action-angle chart or potential is invalid along the path."""


# -- warnings --------------------------------------------------------------

class AdiabaticityWarning(UserWarning):
    """Richardson sequence did not converge monotonically."""
