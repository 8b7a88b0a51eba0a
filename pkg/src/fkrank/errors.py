"""Exception hierarchy shared by all modules."""


class FKRankError(Exception):
    """Base class for every error raised by fkrank."""


class UsageError(FKRankError, ValueError):
    """Invalid arguments: wrong shapes, out-of-range parameters, bad JSON."""


class FactorizationError(FKRankError):
    """A matrix factorization did not converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class IllConditionedSwapError(FKRankError):
    """Adjacent Schur swap between numerically equal but distinct eigenvalues."""

    def __init__(self, message, pair):
        super().__init__(message)
        self.pair = pair


class IdempotencyError(FKRankError):
    """Input expected to be idempotent is not."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class BoundaryAmbiguityError(FKRankError):
    """Eigenvalues lie too close to the boundary of a region."""

    def __init__(self, message, eigenvalues):
        super().__init__(message)
        self.eigenvalues = list(eigenvalues)


class InvarianceError(FKRankError):
    """A projection is not invariant under the operator."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class NonBijectiveError(FKRankError):
    """A matrix map that must be bijective is singular."""


class NotAnIsometryError(FKRankError):
    """A map fails a rank-isometry necessary condition."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegeneracyError(FKRankError):
    """No usable transport vector in the inner-automorphism recovery."""


class InconsistencyError(FKRankError):
    """Recovered implementing element is singular: input was not an automorphism."""
