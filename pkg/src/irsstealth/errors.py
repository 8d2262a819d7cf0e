"""Exception types shared across the package."""


class DegenerateGeometryError(ValueError):
    """Coincident points or an IRS that is not above the region plane."""


class SingularDualError(ArithmeticError):
    """The dual matrix Q is singular; raise the mu floor above zero."""


class LmiError(RuntimeError):
    pass


class LmiInfeasibleError(LmiError):
    """No strictly feasible point exists.

    ``certificate`` holds the phase-one dual matrix (a PSD direction that
    separates the affine family from the PSD cone) and ``margin`` the best
    minimum eigenvalue margin reached.
    """

    def __init__(self, message, certificate=None, margin=None):
        super().__init__(message)
        self.certificate = certificate
        self.margin = margin


class LmiConvergenceError(LmiError):
    """Iteration limit hit; ``best`` carries the last strictly feasible iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class LmiUnboundedError(LmiError):
    pass
