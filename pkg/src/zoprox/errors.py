"""Exception types shared across the toolkit."""


class ZoproxError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(ZoproxError):
    """An argument violates a precondition (empty input, bad range, ...)."""


class DegenerateWeights(ZoproxError):
    """Every Gibbs weight vanished; no finite log-weight to normalize."""


class QuadratureNotConverged(ZoproxError):
    """Adaptive quadrature hit its node cap without stabilizing.

    Carries the last two estimates and the node count so callers can
    inspect how far apart the final refinements were.
    """

    def __init__(self, message, last=None, previous=None, nodes=None):
        super().__init__(message)
        self.last = last
        self.previous = previous
        self.nodes = nodes


class BracketFailure(ZoproxError):
    """Root bracketing expanded past its width limit without a sign change."""


class NoOracle(ZoproxError):
    """The objective has neither a closed form nor a 1-D quadrature route."""


class InvalidSchedule(ZoproxError):
    """A sample-size schedule violates the summability hypothesis."""


class LambdaTooLarge(ZoproxError):
    """A bound valid only for lambda < 1/L was requested with lambda >= 1/L."""


class InvalidRadius(ZoproxError):
    """Escape-probability radius R must exceed d*lambda*delta."""


class InvalidEpsilon(ZoproxError):
    """Stability-bound epsilon must sit strictly below the weight floor."""
