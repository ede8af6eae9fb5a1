# Purpose: Exception hierarchy shared by the solver modules, the service layer,
# the CLI and the HTTP API. Input-validation failures also derive from ValueError
# so callers that only know about ValueError (like the API layer) still catch them.


class RfDdesError(Exception):
    """Base class for every error raised by this package."""


class MatrixFormatError(RfDdesError, ValueError):
    """A Matrix Market file could not be parsed or is not a supported matrix."""


class DimensionMismatchError(RfDdesError, ValueError):
    """Operands have incompatible shapes."""


class DenseCapError(RfDdesError, ValueError):
    """A dense conversion was requested for a matrix larger than the configured cap."""

    def __init__(self, n: int, cap: int):
        super().__init__(f"dense conversion of n={n} exceeds the dense cap {cap}")
        self.n = n
        self.cap = cap


class PartitionError(RfDdesError, ValueError):
    """Invalid partitioning request (for example more parts than vertices)."""


class StructureError(RfDdesError):
    """Internal consistency error: the reordered pencil does not have arrowhead form."""


class FactorizationError(RfDdesError):
    """A sparse or dense direct factorization hit a singular pivot."""

    def __init__(self, shift: complex, detail: str = ""):
        message = f"factorization failed at shift {shift}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.shift = shift


class SingularShiftError(FactorizationError):
    """The real shift sigma coincides with an eigenvalue of an interior pencil."""

    def __init__(self, shift: float, detail: str = ""):
        super().__init__(shift, detail or "B - sigma*M_B is singular; perturb sigma slightly")


class MassNotSPDError(RfDdesError, ValueError):
    """The mass matrix M is not symmetric positive definite."""


class ConvergenceError(RfDdesError):
    """An iterative method did not converge within its iteration cap."""


class ReferenceUnavailableError(RfDdesError):
    """No reference eigenvalues can be computed (matrix too large and not an analytic mesh)."""


class PhaseError(RfDdesError):
    """Wraps a failure inside one phase of a solver pipeline."""

    def __init__(self, phase: str, cause: BaseException):
        super().__init__(f"phase '{phase}' failed: {cause}")
        self.phase = phase
        self.cause = cause
