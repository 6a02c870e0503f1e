"""Exception hierarchy for the psl package."""


class PslError(Exception):
    """Base class for all psl-specific errors."""


class InvalidDimensionError(PslError, ValueError):
    """Hilbert-space dimension is out of range (N must be >= 2)."""


class InvalidStateError(PslError, ValueError):
    """A density matrix fails trace, Hermiticity or positivity checks."""


class InvalidRatesError(PslError, ValueError):
    """Relaxation rates violate positivity or realizability constraints."""


class UnsupportedConfigurationError(PslError, ValueError):
    """The configuration is valid but outside the implemented regime
    (e.g. unequal dephasing rates for the magic-subspace analysis)."""


class StiffnessError(PslError, RuntimeError):
    """The adaptive integrator underflowed its step size."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DegenerateMagicSubspaceError(PslError, ValueError):
    """The linear system locating the fixed diagonal coordinates is singular."""


class NoCrossingError(PslError, ValueError):
    """The off-diagonal purity cannot reach zero (decay offset >= 0)."""


class SingularMuDynamicsError(PslError, RuntimeError):
    """The denominator of the multiplier ODE vanished."""

    def __init__(self, message, mu=None, last_sample=None):
        super().__init__(message)
        self.mu = mu
        self.last_sample = last_sample


class DivergenceError(PslError, ValueError):
    """Closed-form multiplier evaluated at or beyond its blow-up time."""

    def __init__(self, message, t_d=None):
        super().__init__(message)
        self.t_d = t_d


class StuckPointError(PslError, RuntimeError):
    """No control amplitudes can hold the state on the magic subspace here."""


class DomainError(PslError, ValueError):
    """Scalar argument outside the domain of a closed-form expression."""


class DivergedOptimizationError(PslError, RuntimeError):
    """Pulse optimization produced a non-finite cost or gradient."""

    def __init__(self, message, iterate_log=None):
        super().__init__(message)
        self.iterate_log = iterate_log or []


class PositivityWarning(UserWarning):
    """A propagated state left the positive cone beyond tolerance."""
