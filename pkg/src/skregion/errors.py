"""Exception types shared across the toolkit."""


class VariableNameError(NameError):
    """Unknown, duplicated or colliding variable name."""


class ShapeError(ValueError):
    """Cardinality or tensor-shape mismatch."""


class ArgumentError(ValueError):
    """Invalid combination of arguments (overlapping sets, inconsistent alpha, ...)."""


class NumericalConsistencyError(ArithmeticError):
    """An information measure came out clearly negative."""


class RangeError(ValueError):
    """Parameter outside its admissible range."""


class FormatError(ValueError):
    """Input file does not follow the expected schema."""


class ValidationError(ValueError):
    """Well-formed input whose probabilities are not valid."""


class PreconditionError(RuntimeError):
    """Model does not satisfy the structural preconditions of a computation."""


class CostError(RuntimeError):
    """Projected search size exceeds the configured cap."""


class UnderpoweredError(ValueError):
    """Too few samples for a meaningful estimate."""
