"""Exception hierarchy shared by all modules."""


class VarentError(Exception):
    """Base class for every error raised by this package."""


class NonHermitian(VarentError, ValueError):
    pass


class DimMismatch(VarentError, ValueError):
    pass


class LengthMismatch(VarentError, ValueError):
    pass


class UnsupportedDim(VarentError, ValueError):
    pass


class ParamOutOfRange(VarentError, ValueError):
    pass


class ParamCountMismatch(VarentError, ValueError):
    pass


class ComplexCoefficient(VarentError, ArithmeticError):
    """Regrouping a Pauli decomposition left a non-real coefficient."""


class ZeroMap(VarentError, ValueError):
    """The decomposition has no nonzero terms, so no sampling distribution exists."""


class NonFiniteLoss(VarentError, FloatingPointError):
    pass


class NonMonotone(VarentError, ValueError):
    """A threshold scan found more than one sign change on its validation grid."""
