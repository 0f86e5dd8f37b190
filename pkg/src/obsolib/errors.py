"""Exception hierarchy shared by all obsolib modules."""


class ObsolibError(Exception):
    """Base class for every error raised by obsolib."""


class DomainError(ObsolibError, ValueError):
    """An argument lies outside the domain of a function."""


class PoleError(DomainError):
    """The function has a pole at the requested argument."""


class ConvergenceError(ObsolibError, ArithmeticError):
    """An iterative method failed to converge.

    ``diagnostics`` carries whatever state the failing routine could report
    (iteration count, last iterate, residual, ...).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class DataError(ObsolibError, ValueError):
    """Input data is malformed or unusable."""


class ParseError(DataError):
    """A row of an input file failed validation."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.field = field
        self.reason = message


class DegenerateSampleError(DataError):
    """The sample cannot identify the requested model (e.g. all ages zero)."""


class UnderdispersionError(DataError):
    """Index of dispersion <= 1: the negative binomial MLE does not exist."""


class TailUnderflowError(ObsolibError, ArithmeticError):
    """Survival probability underflowed to zero."""

    def __init__(self, message, largest_valid_x=None):
        super().__init__(message)
        self.largest_valid_x = largest_valid_x
