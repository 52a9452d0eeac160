"""q-Mahler expansions f = sum a_n binom(x, n)_q on the nodes x = 0..M."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetError, PrecisionError
from .funcexpr import CFunction, Const, QBinom, Scale, _make_sum, eval_function
from .padic import PadicScalar
from .qcalc import QContext, qbinom_exact
from .summation import DEFAULT_BUDGET


@dataclass(frozen=True)
class MahlerExpansion:
    ctx: QContext
    coeffs: list  # a_0..a_M
    tail_norms: list  # n |a_n| as rationals
    source: object = field(repr=False, default=None)

    @property
    def horizon(self):
        return len(self.coeffs) - 1

    def evaluate(self, x: int) -> PadicScalar:
        ctx = self.ctx
        total = PadicScalar.exact_zero(ctx.p)
        for n, a in enumerate(self.coeffs):
            if n > x >= 0:
                break
            total = total + a * ctx.scalar(qbinom_exact(ctx.q_value, x, n))
        return total


def basis_matrix(ctx: QContext, M: int, *, budget=DEFAULT_BUDGET) -> list:
    """B[i][n] = binom(i, n)_q for 0 <= i, n <= M (lower unitriangular)."""
    if M < 0:
        raise ValueError("M must be >= 0")
    if (M + 1) ** 2 > budget:
        raise BudgetError(f"a {M + 1}x{M + 1} basis exceeds the budget of {budget}")
    zero = PadicScalar.exact_zero(ctx.p)
    return [
        [ctx.scalar(qbinom_exact(ctx.q_value, i, n)) if n <= i else zero for n in range(M + 1)]
        for i in range(M + 1)
    ]


def _samples(ctx, source, M):
    if isinstance(source, CFunction):
        return [eval_function(ctx, source, x) for x in range(M + 1)]
    values = list(source)
    if len(values) < M + 1:
        raise ValueError(f"need {M + 1} samples, got {len(values)}")
    return [v if isinstance(v, PadicScalar) else ctx.scalar(v) for v in values[: M + 1]]


def expand_mahler(ctx: QContext, f, M: int, *, budget=DEFAULT_BUDGET) -> MahlerExpansion:
    """Coefficients a_0..a_M by forward substitution against basis_matrix.

    ``f`` is a CFunction or a sequence of samples f(0), f(1), ...  The basis
    is unitriangular, so no division occurs and no precision is lost.
    """
    B = basis_matrix(ctx, M, budget=budget)
    values = _samples(ctx, f, M)
    coeffs = []
    for i in range(M + 1):
        acc = values[i]
        for n in range(i):
            acc = acc - B[i][n] * coeffs[n]
        coeffs.append(acc)
    tails = [n * a.norm for n, a in enumerate(coeffs)]
    return MahlerExpansion(ctx, coeffs, tails, f)


def truncate_tail(e: MahlerExpansion, m: int):
    """(f_m, tail_bound): f_m = sum_{i<=m} a_i binom(x, i)_q and max_{m<=n<=M} n|a_n|.

    The bound only covers the horizon M of the expansion.
    """
    if not 0 <= m <= e.horizon:
        raise ValueError(f"m must lie in [0, {e.horizon}]")
    terms = []
    for i, a in enumerate(e.coeffs[: m + 1]):
        if a.norm == 0:
            continue
        terms.append(Const(a) if i == 0 else Scale(a, QBinom(i)))
    f_m = _make_sum(terms) if terms else Const(0)
    bound = max(e.tail_norms[m:], default=Fraction(0))
    return f_m, bound


def solve_linear(A: list, b: list) -> list:
    """Solve A x = b over Q_p by Gaussian elimination with largest-norm pivots."""
    n = len(A)
    rows = [list(r) + [v] for r, v in zip(A, b)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: rows[r][col].norm)
        if rows[pivot][col].norm == 0:
            raise PrecisionError("singular system at working precision")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        head = rows[col]
        for r in range(col + 1, n):
            if rows[r][col].norm == 0:
                continue
            factor = rows[r][col] / head[col]
            rows[r] = [x - factor * y for x, y in zip(rows[r], head)]
    x = [None] * n
    for i in reversed(range(n)):
        acc = rows[i][n]
        for j in range(i + 1, n):
            acc = acc - rows[i][j] * x[j]
        x[i] = acc / rows[i][i]
    return x
