"""Exception hierarchy shared across the package."""


class SimpsonError(Exception):
    """Base class for every error raised by this package."""


class AllZeroCounts(SimpsonError, ValueError):
    pass


class ZeroConditioningMargin(SimpsonError, ValueError):
    """A conditional probability was requested on an event of probability zero."""


class SingularKernel(SimpsonError, ValueError):
    pass


class InvalidCause(SimpsonError, ValueError):
    """The kernel p(B|C) cannot be realized by any cause for the given table."""


class NotAParadox(SimpsonError, ValueError):
    pass


class NotFound(SimpsonError):
    """The ternary search exhausted its budget. Not a proof of nonexistence."""


class BudgetExceeded(SimpsonError, RuntimeError):
    pass


class DimensionMismatch(SimpsonError, ValueError):
    pass


class NotPositiveDefinite(SimpsonError, ValueError):
    pass


class IllConditionedBlock(SimpsonError, ValueError):
    pass


class DegenerateB(SimpsonError, ValueError):
    pass


class ParseError(SimpsonError, ValueError):
    pass


class SchemaError(SimpsonError, ValueError):
    pass


class NormalizationError(SimpsonError, ValueError):
    pass


class InvalidPartition(SimpsonError, ValueError):
    pass


class InconsistentData(SimpsonError, ValueError):
    pass
