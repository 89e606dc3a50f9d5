"""Exception hierarchy. The CLI maps these onto exit codes."""


class LagscopeError(Exception):
    """Base class for all errors raised by lagscope."""


class ValidationError(LagscopeError, ValueError):
    """Input data or configuration violates a documented constraint (exit code 2)."""


class ParseError(ValidationError):
    pass


class RangeError(ValidationError):
    pass


class DuplicateTickError(ValidationError):
    pass


class InconsistentCountsError(ValidationError):
    """Cross-correlation value incompatible with the event counts."""


class PriorConfigError(ValidationError):
    pass


class UnconstrainedBlockError(ValidationError):
    """A block receives no weight from the data, so its height is undetermined."""


class SearchTooLargeError(ValidationError):
    pass


class NumericalConsistencyError(LagscopeError, ArithmeticError):
    """An internal numerical check failed (exit code 3)."""
