"""Exception hierarchy shared by the solver modules."""


class MooneySLAError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(MooneySLAError, ValueError):
    """Material or run parameters violate their admissibility conditions."""


class SingularStrainError(MooneySLAError, ArithmeticError):
    """A strain tensor that must be inverted is (numerically) singular."""


class InvalidStrainError(MooneySLAError, ValueError):
    """A left Cauchy-Green tensor is not symmetric positive definite."""


class StepTooLargeError(MooneySLAError):
    """The incremental displacement gradient violates the small-step premise.

    Raised when ``I + H`` is nearly singular or when the displacement
    gradient of an element exceeds the configured guard.  Increase the
    number of load steps.
    """


class MeshError(MooneySLAError, ValueError):
    """Malformed or inconsistent mesh data."""


class CornerConflictError(MeshError):
    """A slip node sits between two non-parallel slip segments."""


class SolverError(MooneySLAError):
    """The linear solver did not reach the requested residual."""


class AlphaTooLargeError(MooneySLAError, ValueError):
    """The coercivity constant is too large for the root formula to apply."""


class CertificationError(MooneySLAError):
    """Base for coercivity-certification failures.

    The partially filled report is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class HypothesesViolatedError(CertificationError):
    """At least one sufficient condition for coercivity fails."""


class BetaExceedsMaxError(CertificationError):
    """No incompressibility modulus below ``beta_max`` makes ``A - alpha I`` PSD."""


class InternalInconsistencyError(MooneySLAError, AssertionError):
    """Two independent evaluation routes disagree (an implementation bug)."""
