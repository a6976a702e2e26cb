"""Exception types raised by the numerical modules and mapped to CLI exit codes."""


class DSLabError(Exception):
    """Base class for all dslab errors."""


class ConfigError(DSLabError, ValueError):
    """Invalid or inconsistent configuration."""


class PreconditionError(DSLabError, ValueError):
    """An operation was called outside its documented input range."""


class GridError(PreconditionError):
    """Invalid grid request (odd node count, non-positive length, ...)."""


class ParityError(PreconditionError):
    """A field violates the parity required by an operation."""


class SpectrumError(DSLabError, RuntimeError):
    """Fewer localized eigenvalues than requested."""


class NearSingularError(DSLabError, RuntimeError):
    """Spectral parameter too close to a pole of the resolvent."""


class ConvergenceError(DSLabError, RuntimeError):
    """An iterative solver did not converge."""


class ConditioningError(ConvergenceError):
    """A Newton Jacobian is numerically singular."""


class NoInstabilityError(DSLabError, RuntimeError):
    """The pencil has no negative direction at this wavenumber."""


class BlowUpError(DSLabError, RuntimeError):
    """The time integrator produced non-finite values."""


class GrowthWindowError(DSLabError, RuntimeError):
    """The perturbation never entered the linear-growth window."""
