"""Exception hierarchy shared by the library and the CLI."""


class QVolkError(Exception):
    """Base class for every error raised by qvolk."""


class DomainError(QVolkError, ValueError):
    """Argument outside the domain where a series or operation is defined."""


class PrecisionError(QVolkError, ArithmeticError):
    """Working precision exhausted (e.g. division by a zero known only to O(p^k))."""


class BudgetError(QVolkError):
    """A summation would exceed the configured term budget."""


class FunctionSyntaxError(QVolkError, ValueError):
    """Malformed function text; ``column`` is the 0-based offset of the problem."""

    def __init__(self, message, column):
        super().__init__(f"{message} at column {column}")
        self.column = column


class NotPolynomialError(QVolkError, ValueError):
    """Formal q-derivative requested for a tree outside the q-polynomial subclass."""


class DecompositionError(QVolkError):
    """Decomposition preconditions failed (not strong, or density not fittable)."""


class NotExactError(QVolkError, ValueError):
    """A closed-form route needs exact rational data that the input does not have."""


class NotIntegralError(QVolkError, ValueError):
    """The integer fast path needs p-integral constants."""
