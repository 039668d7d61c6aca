"""Exception hierarchy shared by every module."""


class RequpError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(RequpError, ValueError):
    """Input violates a precondition (shape, range, bijection, ...)."""


class SchemaError(ValidationError):
    """A serialized document does not match its schema.

    ``path`` is a JSON-pointer string locating the offending field.
    """

    def __init__(self, path: str, message: str):
        self.path = path or "/"
        super().__init__(f"{self.path}: {message}")


class BoundViolationError(ValidationError):
    """A polynomial exceeds modulus one somewhere on the unit circle."""

    def __init__(self, x: float, value: float):
        self.x = float(x)
        self.value = float(value)
        super().__init__(f"|P| = {value:.12g} > 1 at x = {x:.12g}")


class ConditioningError(RequpError, ArithmeticError):
    """A numerical step lost too much accuracy to be trusted."""

    def __init__(self, message: str, step: int | None = None, defect: float | None = None):
        self.step = step
        self.defect = defect
        super().__init__(message)


class CeilingExceededError(RequpError):
    """The Cesaro order needed for a target exceeds the configured ceiling."""

    def __init__(self, required: int, ceiling: int):
        self.required = int(required)
        self.ceiling = int(ceiling)
        super().__init__(
            f"required Cesaro order N ~ {self.required} exceeds ceiling {self.ceiling}"
        )


class VerificationError(RequpError, ArithmeticError):
    """A measured error broke an asserted bound."""


class ConstructionError(RequpError, ArithmeticError):
    """A requested gate construction does not exist for the chosen variant."""
