"""Exception types shared across the package."""


class FloquetFanoError(Exception):
    """Base class for all package errors."""


class ConfigError(FloquetFanoError):
    """Invalid model or run configuration."""


class NonPositiveBandError(ConfigError):
    pass


class NonPositiveFrequencyError(ConfigError):
    pass


class NegativeCouplingError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass


class OutsideBandError(FloquetFanoError):
    """Density of states requested outside the open band interval."""


class BranchPointError(FloquetFanoError):
    """Green's function evaluated within the guard radius of a branch point."""


class NonConvergentQuadratureError(FloquetFanoError):
    """Quadrature oracle failed to reach the requested accuracy."""


class SingularGYMatrixError(FloquetFanoError):
    """Ladder propagator matrix numerically singular during inversion."""


class SingularDeltaAError(FloquetFanoError):
    """Scalar driven-ladder propagator vanishes within the guard radius."""


class LadderPoleProximityError(FloquetFanoError):
    """Bare ladder denominator z - e_A - n*omega inside the guard radius."""


class NoConvergenceError(FloquetFanoError):
    """Root iteration did not converge within the iteration budget."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class SheetFlipLivelockError(FloquetFanoError):
    """Sheet map oscillates between iterates without residual progress."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class NoTruncationConvergenceError(FloquetFanoError):
    """Pole did not stabilize under increasing Floquet truncation."""


class NonFiniteStateError(FloquetFanoError):
    """Time integration produced NaN/Inf amplitudes."""

    def __init__(self, message, last_good_time=None, partial=None):
        super().__init__(message)
        self.last_good_time = last_good_time
        self.partial = partial


class InsufficientDataError(FloquetFanoError):
    """Not enough usable samples in the requested fit window."""


class DegenerateGridError(FloquetFanoError):
    """Sweep or audit grid is empty or collapses to a point."""
