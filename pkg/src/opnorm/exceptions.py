"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An input violates a documented precondition (e.g. negative diagonal)."""


class OracleSizeError(PreconditionError):
    """The brute-force oracle refuses instances above its hard size cap."""


class NonConvergenceError(RuntimeError):
    """Eigensolver ran out of matvecs; carries the best iterate found."""

    def __init__(self, message, value=None, vector=None, residual=None):
        super().__init__(message)
        self.value = value
        self.vector = vector
        self.residual = residual


class NoFeasibleProjectionError(RuntimeError):
    """No candidate projection met the reconstruction budget.

    Carries the best infeasible candidate so callers can report it.
    """

    def __init__(self, message, best_candidate=None, best_kappa=None,
                 best_error=None):
        super().__init__(message)
        self.best_candidate = best_candidate
        self.best_kappa = best_kappa
        self.best_error = best_error
