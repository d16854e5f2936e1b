"""Exception hierarchy shared by all modules."""


class Sigma2BVPError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(Sigma2BVPError):
    """An argument is outside its documented range."""


class InvalidMetricError(Sigma2BVPError):
    """A metric (or metric node) is not symmetric positive definite."""


class NumericFailureError(Sigma2BVPError):
    """An iterative numerical kernel failed to converge."""


class UnsupportedModelError(Sigma2BVPError):
    """The requested operation is not defined for this chart or model."""


class InvalidModelError(Sigma2BVPError):
    """A model violates the hypotheses required by a driver."""


class ConeExitError(Sigma2BVPError):
    """An iterate left the Gamma_2+ cone.

    Carries the offending node indices and their signed margins.
    """

    def __init__(self, message, nodes=None, margins=None):
        super().__init__(message)
        self.nodes = nodes
        self.margins = margins


class LineSearchStallError(Sigma2BVPError):
    """Cone-safeguarded backtracking shrank the step below 1e-12."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NonConvergenceError(Sigma2BVPError):
    """Newton hit the iteration cap before reaching the tolerance."""

    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace


class ContinuationError(Sigma2BVPError):
    """A continuation sweep could not complete; the trace is attached."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
