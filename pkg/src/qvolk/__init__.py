"""p-adic q-Volkenborn integration, q-invariant distributions and q-Mahler expansions."""

from .errors import (
    BudgetError,
    DecompositionError,
    DomainError,
    FunctionSyntaxError,
    NotExactError,
    NotIntegralError,
    NotPolynomialError,
    PrecisionError,
    QVolkError,
)
from .funcexpr import eval_function, parse_function, to_text
from .padic import PadicScalar, make_scalar, pexp, plog
from .qcalc import QContext, qint, qpow

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "DecompositionError",
    "DomainError",
    "FunctionSyntaxError",
    "NotExactError",
    "NotIntegralError",
    "NotPolynomialError",
    "PrecisionError",
    "QVolkError",
    "PadicScalar",
    "QContext",
    "eval_function",
    "make_scalar",
    "parse_function",
    "pexp",
    "plog",
    "qint",
    "qpow",
    "to_text",
]
