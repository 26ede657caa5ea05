"""Exception types shared across the package."""


class QcapError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(QcapError):
    """Operands have incompatible shapes."""


class NotHermitian(QcapError):
    """A matrix deviates from its adjoint beyond tolerance."""


class ConvergenceFailure(QcapError):
    """An iterative numerical routine failed to converge."""


class NegativeSpectrum(QcapError):
    """A matrix expected to be positive semidefinite has a clearly negative eigenvalue."""


class CompletenessViolation(QcapError):
    """Kraus operators or POVM outcomes do not sum to the identity."""


class SingularNormalization(QcapError):
    """A normalization matrix stayed singular after the allowed number of retries."""


class NonFiniteObjective(QcapError):
    """The objective returned NaN or Inf during a line search."""


class InvalidDistribution(QcapError):
    """A joint probability table violates its invariants."""


class ParseError(QcapError):
    """Text input does not conform to the expected grammar."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class RaggedRows(ParseError):
    """Rows of a matrix literal have different lengths."""


class LowercaseImaginaryUnit(ParseError):
    """The imaginary unit was written as 'i'; it must be upper-case 'I'."""


class HeaderMissing(ParseError):
    """A required header line is absent from an import file."""

    def __init__(self, field: str, line: int | None = None):
        self.field = field
        super().__init__(f"missing header line for '{field}'", line=line)


class WrongMatrixCount(ParseError):
    """An import file does not contain the announced number of operators."""

    def __init__(self, expected: int, found: int):
        self.expected = expected
        self.found = found
        super().__init__(f"expected {expected} matrix lines, found {found}")
