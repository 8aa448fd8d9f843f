"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """A documented precondition (size, truncation level...) is violated."""


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its requested accuracy."""


class ResourceError(RuntimeError):
    """A computation would exceed its enumeration or memory budget."""


class ConsistencyError(AssertionError):
    """An internal invariant failed; indicates an arithmetic bug."""
