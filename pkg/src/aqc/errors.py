"""Exception types shared across the package."""


class AqcError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(AqcError, ValueError):
    """Shapes of operators, frequencies or fields do not line up."""


class NonElliptic(AqcError):
    """The operation requires a symbol that is injective away from zero."""


class EllipticOperator(AqcError):
    """Counterexample machinery was handed an operator with no symbol kernel."""


class ZeroField(AqcError, ValueError):
    """A ratio was requested against a field with vanishing energy."""


class NonPositiveWeight(AqcError, ValueError):
    """Weighted norms need a strictly positive weight on the grid."""


class NegativeShift(AqcError, ValueError):
    """Shifted N-functions are defined for shifts a >= 0 only."""


class IndexOutOfRange(AqcError, IndexError):
    """Plane-wave profiles are indexed by i >= 1."""


class NonFiniteEnergy(AqcError, FloatingPointError):
    """Energy or gradient evaluation produced NaN/inf during descent."""


class GridTooSmall(AqcError, ValueError):
    """Not enough dyadic levels on the grid for the requested diagnostic."""


class MalformedDefinition(AqcError, ValueError):
    """A JSON operator/problem definition failed validation."""
