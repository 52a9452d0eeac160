"""q-Volkenborn integration and q-Bernoulli numbers and polynomials."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .funcexpr import CFunction, Product, QBracket, QPower
from .padic import PadicScalar
from .qcalc import QContext, qint, qint_exact, qpow
from .summation import DEFAULT_BUDGET, finite_sums


@dataclass(frozen=True)
class IntegralResult:
    value: PadicScalar
    levels_used: list
    successive_defects: list  # |S_{N+1} - S_N| as exact rationals
    converged: bool
    method: str = "direct"
    partial_sums: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class QBernoulliTable:
    ctx: QContext
    beta: list
    method: str  # "closed" or "integral"


def decays(defects) -> bool:
    """Last three defects each strictly below their predecessor (or exactly zero)."""
    if len(defects) < 3:
        return False
    tail = defects[-3:]
    return all(b < a or b == 0 for a, b in zip(tail, tail[1:]))


def riemann_levels(ctx: QContext, f, levels, *, budget=DEFAULT_BUDGET, method="auto"):
    """Level-N sums (1/[p^N]_q) sum_{x<p^N} f(x) q^x for every N in ``levels``.

    Returns ``(sums, method_used)``; each sum is known to ctx.precision.
    """
    p = ctx.p
    top = max(levels)
    sums, chosen = finite_sums(
        ctx, f, [p**N for N in levels], ctx.precision + top, weight=1, budget=budget, method=method
    )
    wide = ctx.with_precision(ctx.precision + 2 * top)
    out = [(t / qint(wide, p**N)).truncate(ctx.precision) for N, t in zip(levels, sums)]
    return out, chosen


def riemann_sum(ctx: QContext, f, N: int, *, budget=DEFAULT_BUDGET, method="auto") -> PadicScalar:
    """(1/[p^N]_q) sum_{x=0}^{p^N-1} f(x) q^x.

    ``f`` is a CFunction or a callable on integers.  Enumeration advances q^x
    by one multiplication per term; past the budget a CFunction is summed in
    closed form instead.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    return riemann_levels(ctx, f, [N], budget=budget, method=method)[0][0]


def integrate(ctx: QContext, f, N_min: int, N_max: int, *, budget=DEFAULT_BUDGET,
              method="auto") -> IntegralResult:
    """Partial sums for N_min..N_max with their successive defects.

    Non-convergence is reported through ``converged``, never raised.
    """
    if not 1 <= N_min < N_max:
        raise ValueError("need 1 <= N_min < N_max")
    levels = list(range(N_min, N_max + 1))
    sums, chosen = riemann_levels(ctx, f, levels, budget=budget, method=method)
    defects = [(b - a).norm for a, b in zip(sums, sums[1:])]
    return IntegralResult(sums[-1], levels, defects, decays(defects), chosen, sums)


def bernoulli_number(m: int) -> Fraction:
    """Classical B_m with B_1 = -1/2."""
    b = [Fraction(1)]
    for n in range(1, m + 1):
        b.append(-sum(comb(n + 1, k) * b[k] for k in range(n)) / (n + 1))
    return b[m]


def qbernoulli_closed(ctx: QContext, m: int) -> PadicScalar:
    """beta_{m,q} = (1/(1-q)^m) [ (q-1)/log q + sum_{i=1}^m binom(m,i) (-1)^i i/[i]_q ].

    The i = 0 term is the limit p^N/[p^N]_q -> (q-1)/log q; at q = 1 the
    classical Bernoulli number is returned.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if ctx.q_is_one:
        return ctx.scalar(bernoulli_number(m))
    e = ctx.e
    work = ctx.with_precision(ctx.precision + (m + 1) * e + 2)
    q = work.q
    total = (q - 1) / work.log_q
    for i in range(1, m + 1):
        total = total + work.scalar((-1) ** i * comb(m, i) * Fraction(i) / qint_exact(work.q_value, i))
    return (total / (1 - q) ** m).truncate(ctx.precision)


def bernoulli_integrand(m: int) -> CFunction:
    """q^(-x) [x]_q^m"""
    if m == 0:
        return QPower(-1)
    return Product((QPower(-1),) + (QBracket(),) * m)


def qbernoulli_integral(ctx: QContext, m: int, N: int, *, budget=DEFAULT_BUDGET,
                        method="auto") -> PadicScalar:
    """Level-N Riemann sum of q^(-x)[x]_q^m."""
    return riemann_sum(ctx, bernoulli_integrand(m), N, budget=budget, method=method)


def qbernoulli_table(ctx: QContext, m_max: int, method="closed", N=None, **kw) -> QBernoulliTable:
    if method == "closed":
        beta = [qbernoulli_closed(ctx, m) for m in range(m_max + 1)]
    elif method == "integral":
        beta = [qbernoulli_integral(ctx, m, N, **kw) for m in range(m_max + 1)]
    else:
        raise ValueError(f"unknown method {method!r}")
    return QBernoulliTable(ctx, beta, method)


def qbernoulli_poly(ctx: QContext, n: int, x) -> PadicScalar:
    """beta_{n,q}(x) = sum_k binom(n,k) q^(kx) beta_{k,q} [x]_q^(n-k)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    qx = qpow(ctx, x)
    bx = qint(ctx, x)
    total = ctx.scalar(0)
    for k in range(n + 1):
        total = total + comb(n, k) * qx**k * qbernoulli_closed(ctx, k) * bx ** (n - k)
    return total
