"""Exception hierarchy shared by all mflab modules."""


class MFLabError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(MFLabError):
    """Operands have incompatible dimensions or tensor factorizations."""


class NonHermitianInput(MFLabError):
    """A Hermitian operation received a matrix with ||A - A*||_op above tolerance."""


class NotPSD(MFLabError):
    """A positive-semidefinite operation received a matrix with an eigenvalue below -1e-10."""


class InvalidDensityMatrix(MFLabError):
    """Density-matrix validation failed (hermiticity, positivity, or unit trace)."""


class ConvergenceFailure(MFLabError):
    """An iterative factorization exceeded its sweep budget."""


class BadFactorIndex(MFLabError):
    """A partial trace referenced a tensor factor that does not exist."""


class SizeBudgetExceeded(MFLabError):
    """Requested operator or state dimension exceeds the desk-scale budget."""


class FixedPointStall(MFLabError):
    """Self-consistent mean-field iteration failed to reach its residual target."""


class NotPermutationInvariant(MFLabError):
    """An N-body density matrix is not symmetric under particle exchange."""


class CertificationFailure(MFLabError):
    """A certified inequality was violated beyond the declared tolerance.

    Carries the offending (time, k, inequality) triple in args and, when
    available, the full margin report on the ``report`` attribute.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UsageError(MFLabError):
    """Invalid configuration or command-line input."""


class DegenerateKernelCompletion(UserWarning):
    """The symmetric completion of a purification unitary could not be certified.

    Emitted as a warning: the run continues and the measured symmetry defect
    is recorded instead of being assumed small.
    """
