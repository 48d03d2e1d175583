"""Exception hierarchy shared by all modules."""


class MagicAnglesError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(MagicAnglesError, ValueError):
    """Invalid user input (maps to CLI exit code 2)."""


class InvalidPotential(ValidationError):
    pass


class BadTruncation(ValidationError):
    pass


class BadTau(ValidationError):
    pass


class BadN(ValidationError):
    pass


class ZeroGamma(ValidationError):
    pass


class SingularDk(MagicAnglesError):
    """The free Dirac operator has a (numerically) zero diagonal entry."""


class PoleAtLattice(MagicAnglesError):
    pass


class PoleOnGrid(MagicAnglesError):
    pass


class NotConverged(MagicAnglesError):
    """An iterative solver failed to reach its tolerance (CLI exit code 3).

    Attributes
    ----------
    residuals : list of float
        Best residuals reached, when available.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class SingularShift(MagicAnglesError):
    pass


class InsufficientData(MagicAnglesError):
    pass


class FlatObjective(MagicAnglesError):
    pass


class DegenerateKernel(MagicAnglesError):
    pass


class EigenvalueNotIsolated(MagicAnglesError):
    pass


class CertificationFailed(MagicAnglesError):
    """Raised with the first inequality of the certification chain that fails."""

    def __init__(self, message, inequality=None):
        super().__init__(message)
        self.inequality = inequality
