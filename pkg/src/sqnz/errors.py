"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A run configuration violates an invariant; message names the offending key."""


class StrongCouplingError(ValueError):
    """Oscillator coupling outside the weak-coupling regime (Gamma/Omega > 0.1)."""


class RegimeMismatchError(ValueError):
    """A time or band ordering required by an asymptotic regime does not hold."""


class InternalConsistencyError(RuntimeError):
    """A self-check failed (e.g. an integrand that must be real is not)."""


class ConvergenceError(RuntimeError):
    """Quadrature did not reach the requested tolerance within the panel budget.

    Carries the best available estimates so callers can still inspect them.
    """

    def __init__(self, message, st_estimate=None, ns_estimate=None):
        super().__init__(message)
        self.st_estimate = st_estimate
        self.ns_estimate = ns_estimate
