"""q-deformation layer: q^x, [x]_q, q-factorials and q-binomials over Z_p."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError
from .padic import PadicScalar, is_prime, make_scalar, pexp, plog, valuation_of_rational


@dataclass(frozen=True)
class QContext:
    """Ambient parameters: prime, deformation q (an exact rational) and precision.

    ``precision`` is the working absolute precision N_work.  q must satisfy
    v_p(q - 1) >= 1 (>= 2 for p = 2), i.e. |1 - q| < p^(-1/(p-1)); q = 1 is the
    classical limit.
    """

    p: int
    q_value: Fraction
    precision: int
    q: PadicScalar = field(init=False, compare=False, repr=False)
    log_q: PadicScalar | None = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.p, int) or not is_prime(self.p):
            raise ValueError(f"not a prime: {self.p!r}")
        q = Fraction(self.q_value)
        object.__setattr__(self, "q_value", q)
        if self.precision < 1:
            raise ValueError("precision must be positive")
        need = 2 if self.p == 2 else 1
        if q != 1 and valuation_of_rational(q - 1, self.p) < need:
            raise DomainError(
                f"q={q} violates |1-q| < p^(-1/(p-1)): need v_{self.p}(q-1) >= {need}"
            )
        qs = make_scalar(self.p, q, self.precision)
        object.__setattr__(self, "q", qs)
        object.__setattr__(self, "log_q", None if q == 1 else plog(qs))

    @property
    def q_is_one(self):
        return self.q_value == 1

    @property
    def e(self):
        """v_p(q - 1); 0 stands in for the classical case."""
        if self.q_is_one:
            return 0
        return valuation_of_rational(self.q_value - 1, self.p)

    def scalar(self, value, precision=None):
        return make_scalar(self.p, value, self.precision if precision is None else precision)

    def with_precision(self, precision):
        if precision == self.precision:
            return self
        return _context(self.p, self.q_value, precision)

    def power_of_q(self, k):
        """The context with deformation q^k (exact rational exponentiation)."""
        return _context(self.p, self.q_value**k, self.precision)

    def q_mod(self, modulus):
        """q as an int modulo ``modulus`` (q is a p-adic unit)."""
        return self.q_value.numerator * pow(self.q_value.denominator, -1, modulus) % modulus


@functools.lru_cache(maxsize=256)
def _context(p, q_value, precision):
    return QContext(p, q_value, precision)


def _is_exact_int(x):
    return isinstance(x, int) or (isinstance(x, Fraction) and x.denominator == 1)


def qpow(ctx: QContext, x) -> PadicScalar:
    """q^x for x in Z_p.

    Integers are handled exactly; p-adic arguments go through exp(x log q).
    """
    if ctx.q_is_one:
        return ctx.scalar(1)
    if _is_exact_int(x):
        return ctx.scalar(qpow_mod(ctx, int(x), ctx.precision))
    if x.valuation < 0 and not x.is_zero:
        raise DomainError("qpow needs x in Z_p")
    return pexp(x * ctx.log_q, prec=ctx.precision)


def qint(ctx: QContext, x) -> PadicScalar:
    """[x]_q = (1 - q^x)/(1 - q); equals x when q = 1."""
    if _is_exact_int(x):
        return ctx.scalar(qint_mod(ctx, int(x), ctx.precision))
    if x.valuation < 0 and not x.is_zero:
        raise DomainError("qint needs x in Z_p")
    if ctx.q_is_one:
        return x
    return (1 - qpow(ctx, x)) / (1 - ctx.q)


def qpow_mod(ctx: QContext, x: int, k: int) -> int:
    """q^x modulo p^k for an integer x."""
    mod = ctx.p**k
    return pow(ctx.q_mod(mod), x, mod)


def qint_mod(ctx: QContext, x: int, k: int) -> int:
    """[x]_q modulo p^k for an integer x, without dividing by a non-unit."""
    mod = ctx.p**k
    if ctx.q_is_one:
        return x % mod
    e = ctx.e
    big = mod * ctx.p**e
    num = (1 - pow(ctx.q_mod(big), x, big)) % big
    unit = (1 - ctx.q_value) / Fraction(ctx.p) ** e
    return (num // ctx.p**e) * unit.denominator * pow(unit.numerator, -1, mod) % mod


def qint_exact(q: Fraction, n: int) -> Fraction:
    """[n]_q for an integer n and rational q, as an exact rational."""
    if q == 1:
        return Fraction(n)
    return (1 - q**n) / (1 - q)


def qfactorial_exact(q: Fraction, n: int) -> Fraction:
    out = Fraction(1)
    for k in range(1, n + 1):
        out *= qint_exact(q, k)
    return out


def qfact_qbinom(ctx: QContext, x, n: int, kind: str = "binomial") -> PadicScalar:
    """[n]_q! (kind='factorial') or the q-binomial binom(x, n)_q (kind='binomial').

    The binomial is the product formula [x][x-1]...[x-n+1] / [n][n-1]...[1].
    Integer x is evaluated as an exact rational first.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if kind == "factorial":
        return ctx.scalar(qfactorial_exact(ctx.q_value, n))
    if kind != "binomial":
        raise ValueError(f"unknown kind {kind!r}")
    if _is_exact_int(x):
        return ctx.scalar(qbinom_exact(ctx.q_value, int(x), n))
    num = ctx.scalar(1)
    for j in range(n):
        num = num * qint(ctx, x - j)
    return num / ctx.scalar(qfactorial_exact(ctx.q_value, n))


def qbinom_exact(q: Fraction, x: int, n: int) -> Fraction:
    num = Fraction(1)
    for j in range(n):
        num *= qint_exact(q, x - j)
    return num / qfactorial_exact(q, n)


def qbinom(ctx, x, n):
    return qfact_qbinom(ctx, x, n, "binomial")


def qfactorial(ctx, n):
    return qfact_qbinom(ctx, None, n, "factorial")
