"""Capped-precision arithmetic in Q_p.

A nonzero scalar is ``p^valuation * unit`` where ``unit`` is known modulo
``p^rel_precision``; its absolute precision is ``valuation + rel_precision``.
Zero comes in two flavours: the exact zero (infinite precision) and a value
that is zero modulo ``p^k`` (``O(p^k)``).  For the latter ``valuation`` holds
the lower bound ``k``.

Precision rules:

* add/sub: absolute precision is the minimum of the inputs.
* mul/div: relative precision is the minimum of the inputs.
* plog/pexp: absolute precision of the argument, with every term's own loss
  (division by ``n`` or ``n!``) tracked through the same rules.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

from .errors import DomainError, PrecisionError

INF = math.inf

# used only when an exact value meets an exact zero and no precision is implied
DEFAULT_PRECISION = 20


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def valuation_of_int(n: int, p: int) -> int:
    """v_p(n) for a nonzero integer n."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation_of_rational(x, p: int) -> float | int:
    x = Fraction(x)
    if x == 0:
        return INF
    return valuation_of_int(x.numerator, p) - valuation_of_int(x.denominator, p)


def _check_prime(p):
    if not isinstance(p, int) or not is_prime(p):
        raise ValueError(f"not a prime: {p!r}")


class PadicScalar:
    """An element of Q_p known to finite (or, for exact zero, infinite) precision.

    Instances are immutable.  Equality is precision-relative: two scalars are
    equal when they agree modulo ``p^min(abs_precisions)``; for that reason
    scalars are unhashable.
    """

    __slots__ = ("prime", "valuation", "unit", "rel_precision", "is_zero")

    def __init__(self, prime, valuation, unit, rel_precision, is_zero=False):
        object.__setattr__(self, "prime", prime)
        object.__setattr__(self, "valuation", valuation)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "rel_precision", rel_precision)
        object.__setattr__(self, "is_zero", is_zero)

    def __setattr__(self, name, value):
        raise AttributeError("PadicScalar is immutable")

    __hash__ = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def exact_zero(cls, p):
        return cls(p, INF, 0, 0, True)

    @classmethod
    def zero(cls, p, abs_precision):
        """The value 0 known modulo p^abs_precision."""
        if abs_precision == INF:
            return cls.exact_zero(p)
        return cls(p, abs_precision, 0, 0, True)

    @classmethod
    def _normalized(cls, p, v, n, r):
        """p^v * n known modulo p^(v + r)."""
        if r <= 0:
            return cls.zero(p, v + r)
        mod = p**r
        n %= mod
        if n == 0:
            return cls.zero(p, v + r)
        while n % p == 0:
            n //= p
            v += 1
            r -= 1
        return cls(p, v, n, r)

    @classmethod
    def from_rational(cls, p, value, abs_precision):
        x = Fraction(value)
        if x == 0:
            return cls.exact_zero(p)
        num, den = x.numerator, x.denominator
        vn = valuation_of_int(num, p)
        vd = valuation_of_int(den, p)
        v = vn - vd
        r = abs_precision - v
        if r <= 0:
            return cls.zero(p, abs_precision)
        mod = p**r
        u = (num // p**vn) * pow(den // p**vd, -1, mod) % mod
        return cls(p, v, u, r)

    # -- basic properties --------------------------------------------------

    @property
    def abs_precision(self):
        return self.valuation + self.rel_precision

    @property
    def is_exact_zero(self):
        return self.is_zero and self.valuation == INF

    @property
    def norm(self) -> Fraction:
        """|x|_p as an exact rational; zero to the known precision has norm 0."""
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.prime) ** (-self.valuation)

    def is_integral(self):
        return self.is_zero or self.valuation >= 0

    def lift(self) -> Fraction:
        """The canonical rational representative p^v * unit (0 for zero)."""
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.prime) ** self.valuation

    def residue(self, k):
        """This p-adic integer reduced to an int in [0, p^k)."""
        if self.abs_precision < k:
            raise PrecisionError(f"need O(p^{k}), have O(p^{self.abs_precision})")
        if self.is_zero:
            return 0
        if self.valuation < 0:
            raise DomainError("residue of a non-integral scalar")
        return self.unit * self.prime**self.valuation % self.prime**k

    def truncate(self, abs_precision):
        """Forget digits beyond p^abs_precision (no-op if already coarser)."""
        if abs_precision >= self.abs_precision:
            return self
        if self.is_zero or self.valuation >= abs_precision:
            return PadicScalar.zero(self.prime, abs_precision)
        return PadicScalar._normalized(
            self.prime, self.valuation, self.unit, abs_precision - self.valuation
        )

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other, for_add):
        if isinstance(other, PadicScalar):
            if other.prime != self.prime:
                raise ValueError(f"prime mismatch: {self.prime} vs {other.prime}")
            return other
        if isinstance(other, (int, Rational)):
            p = self.prime
            if for_add:
                prec = self.abs_precision
            else:
                prec = self.rel_precision + valuation_of_rational(other, p) if other else 0
                if self.is_zero:
                    prec = DEFAULT_PRECISION
            if prec == INF:
                prec = DEFAULT_PRECISION
            return PadicScalar.from_rational(p, other, prec)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other, True)
        if other is NotImplemented:
            return other
        if self.is_exact_zero:
            return other
        if other.is_exact_zero:
            return self
        p = self.prime
        A = min(self.abs_precision, other.abs_precision)
        vmin = min(self.valuation, other.valuation)
        if vmin >= A:
            return PadicScalar.zero(p, A)
        n = 0
        if not self.is_zero:
            n += self.unit * p ** (self.valuation - vmin)
        if not other.is_zero:
            n += other.unit * p ** (other.valuation - vmin)
        return PadicScalar._normalized(p, vmin, n, A - vmin)

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero:
            return self
        mod = self.prime**self.rel_precision
        return PadicScalar(self.prime, self.valuation, (-self.unit) % mod, self.rel_precision)

    def __sub__(self, other):
        other = self._coerce(other, True)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other, True)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other, False)
        if other is NotImplemented:
            return other
        p = self.prime
        if self.is_exact_zero or other.is_exact_zero:
            return PadicScalar.exact_zero(p)
        if self.is_zero or other.is_zero:
            return PadicScalar.zero(p, self.valuation + other.valuation)
        r = min(self.rel_precision, other.rel_precision)
        return PadicScalar(p, self.valuation + other.valuation, self.unit * other.unit % p**r, r)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other, False)
        if other is NotImplemented:
            return other
        p = self.prime
        if other.is_exact_zero:
            raise ZeroDivisionError("division by exact zero")
        if other.is_zero:
            raise PrecisionError(f"division by O({p}^{other.valuation})")
        if self.is_exact_zero:
            return self
        if self.is_zero:
            return PadicScalar.zero(p, self.valuation - other.valuation)
        r = min(self.rel_precision, other.rel_precision)
        mod = p**r
        u = self.unit * pow(other.unit, -1, mod) % mod
        return PadicScalar(p, self.valuation - other.valuation, u, r)

    def __rtruediv__(self, other):
        other = self._coerce(other, False)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        p = self.prime
        if n < 0:
            return PadicScalar.from_rational(p, 1, self.rel_precision) / self ** (-n)
        if n == 0:
            prec = DEFAULT_PRECISION if self.is_zero else self.rel_precision
            return PadicScalar.from_rational(p, 1, prec)
        if self.is_zero:
            return PadicScalar.zero(p, self.valuation * n)
        r = self.rel_precision
        return PadicScalar(p, self.valuation * n, pow(self.unit, n, p**r), r)

    def __eq__(self, other):
        if not isinstance(other, (PadicScalar, int, Rational)):
            return NotImplemented
        return (self - other).is_zero

    # -- output ------------------------------------------------------------

    def digits(self):
        """Base-p digits of the unit part, least significant first."""
        out = []
        u = self.unit
        for _ in range(self.rel_precision):
            u, d = divmod(u, self.prime)
            out.append(d)
        return out

    def to_text(self):
        p = self.prime
        if self.is_exact_zero:
            return f"{p}-adic: 0 (exact)"
        if self.is_zero:
            return f"{p}-adic: O({p}^{self.valuation})"
        digits = ",".join(str(d) for d in self.digits())
        return f"{p}-adic: v={self.valuation}, digits=[{digits},...]"

    def to_json(self):
        if self.is_exact_zero:
            return {"p": self.prime, "v": None, "digits": [], "prec": None}
        return {
            "p": self.prime,
            "v": self.valuation,
            "digits": self.digits(),
            "prec": self.abs_precision,
        }

    @classmethod
    def from_json(cls, obj):
        p = obj["p"]
        _check_prime(p)
        if obj["v"] is None:
            return cls.exact_zero(p)
        v, prec = obj["v"], obj["prec"]
        u = sum(d * p**i for i, d in enumerate(obj["digits"]))
        return cls._normalized(p, v, u, prec - v)

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        if self.is_exact_zero:
            return f"PadicScalar(p={self.prime}, 0)"
        if self.is_zero:
            return f"PadicScalar(p={self.prime}, O({self.prime}^{self.valuation}))"
        return (
            f"PadicScalar(p={self.prime}, v={self.valuation}, unit={self.unit}, "
            f"prec={self.abs_precision})"
        )


def make_scalar(p, value, abs_precision) -> PadicScalar:
    """The scalar ``value`` (int or rational) in Q_p known modulo p^abs_precision.

    >>> make_scalar(5, Fraction(1, 2), 4).unit
    313
    """
    _check_prime(p)
    x = Fraction(value)  # raises ZeroDivisionError on a zero denominator
    return PadicScalar.from_rational(p, x, abs_precision)


def valuation_norm(a: PadicScalar):
    """(v_p(a), |a|_p) with the norm an exact rational; zero gives (inf, 0)."""
    if a.is_zero:
        return INF, Fraction(0)
    return a.valuation, a.norm


def _floor_log(n, p):
    k = 0
    while n >= p:
        n //= p
        k += 1
    return k


def _min_series_valuation(p):
    return 2 if p == 2 else 1


def plog(a: PadicScalar) -> PadicScalar:
    """Iwasawa-free p-adic logarithm on 1 + pZ_p (1 + 4Z_2 for p = 2)."""
    p = a.prime
    t = a - 1
    if t.is_zero:
        return t
    if t.valuation < _min_series_valuation(p):
        raise DomainError(f"plog needs v_p(a-1) >= {_min_series_valuation(p)}, got {t.valuation}")
    A = a.abs_precision
    vt = t.valuation
    total = PadicScalar.zero(p, A)
    power = t
    n = 1
    # stop once every remaining term has valuation >= A; n*vt - log_p(n) is increasing
    while n * vt - _floor_log(n, p) < A:
        term = power / n
        total = total + term if n % 2 else total - term
        power = power * t
        n += 1
    return total


def pexp(a: PadicScalar, prec=None) -> PadicScalar:
    """p-adic exponential on pZ_p (4Z_2 for p = 2)."""
    p = a.prime
    A = a.abs_precision
    if prec is not None:
        A = min(A, prec)
    if A == INF:
        A = DEFAULT_PRECISION
    one = PadicScalar.from_rational(p, 1, A)
    if a.is_zero:
        return one if a.is_exact_zero else one.truncate(a.abs_precision)
    v = a.valuation
    if v < _min_series_valuation(p):
        raise DomainError(f"pexp needs v_p(a) >= {_min_series_valuation(p)}, got {v}")
    a = a.truncate(A)
    total = one
    term = one
    n = 1
    # v(a^n/n!) >= n*v - (n-1)/(p-1), increasing in n
    while n * v * (p - 1) - (n - 1) < A * (p - 1):
        term = term * a / n
        total = total + term
        n += 1
    return total.truncate(A)
