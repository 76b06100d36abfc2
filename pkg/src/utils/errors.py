"""
Exception hierarchy for the quasiconformal spectral toolkit.

Every error carries the process exit code the CLI should return for it.
"""

EXIT_OK = 0
EXIT_BOUND_VIOLATION = 2
EXIT_SOLVER_FAILURE = 3
EXIT_CONFIG_ERROR = 4


class QCSpectralError(Exception):
    """Base class for all errors raised by this package."""
    exit_code = EXIT_SOLVER_FAILURE


class ConfigError(QCSpectralError):
    """Invalid run configuration or command-line input."""
    exit_code = EXIT_CONFIG_ERROR


class UnknownMap(ConfigError):
    """A map id that does not name one of the closed-form map families."""


class InvalidParams(ConfigError):
    """Parameters outside the admissible range of an operation."""


class InvalidResolution(ConfigError):
    """Mesh resolution below the supported minimum."""


class NonElliptic(QCSpectralError):
    """Matrix field violates det A = 1 or uniform ellipticity."""


class DegenerateDilatation(QCSpectralError):
    """Complex dilatation with |mu| too close to (or above) 1."""


class OutsideDisc(QCSpectralError):
    """A point expected in the open unit disc lies outside it."""


class NotMeasurePreserving(QCSpectralError):
    """The map does not have unit Jacobian."""


class QuadratureDivergence(QCSpectralError):
    """Refinement grows a quadrature sum by more than the allowed factor."""


class NotInfRegular(QCSpectralError):
    """The inverse Jacobian of the map is not essentially bounded."""


class NuExceedsOne(QCSpectralError):
    """The inverse Holder parameter nu(kappa) is not below 1."""


class KappaOutOfRange(QCSpectralError):
    """kappa is outside (1, K/(K-1))."""


class NoFeasibleBeta(QCSpectralError):
    """Empty feasible interval for the quasidisc beta optimisation."""


class DegenerateBoundary(QCSpectralError):
    """Mesh generation produced a triangle with (near) zero area."""


class SolverNoConvergence(QCSpectralError):
    """Eigen solver failed or returned pairs with a large residual."""


class IndefiniteMass(QCSpectralError):
    """Mass matrix is not positive definite."""
