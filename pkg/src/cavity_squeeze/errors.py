"""Exception hierarchy.

Input problems derive from ``ValueError``; failures of the numerics derive
from :class:`NumericalError` so that callers (and the CLI) can tell the two
apart.
"""


class CavitySqueezeError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(CavitySqueezeError, ValueError):
    pass


class StructureViolationError(CavitySqueezeError, ValueError):
    """G not Hermitian or F not symmetric beyond the validation tolerance."""


class NonPositiveDampingError(CavitySqueezeError, ValueError):
    pass


class NotSymplecticError(CavitySqueezeError, ValueError):
    pass


class NoSqueezingError(CavitySqueezeError, ValueError):
    pass


class NumericalError(CavitySqueezeError, ArithmeticError):
    """A computation could not be carried out reliably."""


class SingularKernelError(NumericalError):
    pass


class UnstableModelError(NumericalError):
    """The linearised dynamics has an eigenvalue with non-negative real part."""


class NoThresholdFoundError(NumericalError):
    pass


class AlignmentAmbiguousError(NumericalError):
    pass


class ConsistencyError(NumericalError):
    """Two independent evaluation routes disagree beyond tolerance."""


class InconsistentVerdictError(NumericalError):
    """A classification is contradicted by the measured covariance."""
