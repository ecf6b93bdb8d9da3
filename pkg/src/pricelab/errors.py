"""Exception types shared across the package.

The split matters for the command-line runner, which maps configuration
problems and numerical failures to distinct exit codes.
"""


class PricelabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(PricelabError, ValueError):
    """Input outside the mathematical domain of an operation."""


class DegeneratePointError(DomainError):
    """Metric evaluation at a degenerate point (horizon or axis)."""


class NoBracketError(PricelabError, RuntimeError):
    """Root finder could not bracket a sign change in its search window."""


class QuadratureBudgetError(PricelabError, RuntimeError):
    """Adaptive quadrature exceeded its refinement budget before reaching tolerance."""


class CFLError(PricelabError, ValueError):
    """Requested time step violates the stability bound of the chosen scheme."""


class InstabilityError(PricelabError, RuntimeError):
    """Evolution blew up (field magnitude exceeded the configured guard)."""


class WindowSupportError(PricelabError, ValueError):
    """Perturbation window is not supported inside the required radial band."""


class SignChangeError(PricelabError, ValueError):
    """Tail series changes sign inside the requested fit window."""


class InsufficientSamplesError(PricelabError, ValueError):
    """Too few samples for the requested fit."""


class RankDeficiencyError(PricelabError, RuntimeError):
    """Least-squares design matrix is rank deficient (observers do not separate variables)."""


class ConfigError(PricelabError, ValueError):
    """Invalid experiment configuration.

    ``location`` identifies the offending section/field for diagnostics.
    """

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
