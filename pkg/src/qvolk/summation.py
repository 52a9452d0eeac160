"""Finite sums  sum_{x<X} f(a + s x) q^(w (a + s x))  computed two ways.

``direct`` enumerates the terms (budget-limited) with the integer fast path of
:mod:`qvolk.funcexpr`.  ``closed`` expands f = sum_k c_k q^(kx) and sums each
geometric series exactly, so its cost does not depend on X.  Both return a
PadicScalar known to at least the requested absolute precision; the two
routes are cross-checked in the test suite.
"""

from __future__ import annotations

import functools
from fractions import Fraction

from .errors import BudgetError, NotExactError, NotIntegralError
from .funcexpr import CFunction, eval_function, evaluate_integers, exp_poly
from .padic import PadicScalar, valuation_of_rational
from .qcalc import QContext

DEFAULT_BUDGET = 200_000
CHUNK = 1 << 14

METHODS = ("auto", "direct", "closed")


@functools.lru_cache(maxsize=512)
def _exp_terms(f, q_value):
    return tuple(sorted(exp_poly(f, q_value).items()))


def geometric_mod(ctx: QContext, j: int, count: int, k: int) -> int:
    """sum_{x<count} q^(j x) modulo p^k."""
    p = ctx.p
    mod = p**k
    if j == 0 or ctx.q_is_one:
        return count % mod
    ratio = ctx.q_value**j
    shift = valuation_of_rational(1 - ratio, p)
    big = mod * p**shift
    qj = pow(ctx.q_mod(big), j, big)
    num = (1 - pow(qj, count, big)) % big
    unit = (1 - ratio) / Fraction(p) ** shift
    return (num // p**shift) * unit.denominator * pow(unit.numerator, -1, mod) % mod


def closed_sum(ctx, f, count, precision, offset=0, step=1, weight=0) -> PadicScalar:
    """Exact geometric-series evaluation; needs q != 1 and rational constants."""
    if ctx.q_is_one:
        raise NotExactError("closed form unavailable at q = 1")
    p = ctx.p
    try:
        terms = _exp_terms(f, ctx.q_value)
    except TypeError:  # unhashable PadicScalar constant
        terms = tuple(sorted(exp_poly(f, ctx.q_value).items()))
    if not terms:
        return PadicScalar.exact_zero(p)
    vmin = min(valuation_of_rational(c, p) for _, c in terms)
    k = precision - vmin
    mod = p**k
    total = 0
    for kk, c in terms:
        j = kk + weight
        vc = valuation_of_rational(c, p)
        unit = c / Fraction(p) ** vc
        cu = unit.numerator * pow(unit.denominator, -1, mod) % mod
        shift_a = pow(ctx.q_mod(mod), j * offset, mod)
        g = geometric_mod(ctx, j * step, count, k)
        total += p ** (vc - vmin) * cu * shift_a * g
    return PadicScalar._normalized(p, vmin, total, k)


def _coerce_value(ctx, v, precision):
    if isinstance(v, PadicScalar):
        return v
    return ctx.scalar(v, precision)


def direct_sums(ctx, f, count, precision, checkpoints=None, offset=0, step=1, weight=0):
    """Prefix sums of f(a + s x) q^(w(a + s x)) at each checkpoint (default: count).

    ``f`` is a CFunction or any callable int -> number.  Returns a list of
    PadicScalars, one per checkpoint.
    """
    checkpoints = sorted(checkpoints or [count])
    p = ctx.p
    if isinstance(f, CFunction):
        try:
            return _direct_integer(ctx, f, checkpoints, precision, offset, step, weight)
        except NotIntegralError:
            pass
    work = ctx.with_precision(precision)
    out = []
    total = PadicScalar.exact_zero(p)
    qw = work.scalar(work.q_value ** (weight * step)) if weight else None
    wq = work.scalar(work.q_value ** (weight * offset)) if weight else None
    x = 0
    for cp in checkpoints:
        while x < cp:
            point = offset + step * x
            v = eval_function(work, f, point) if isinstance(f, CFunction) else f(point)
            v = _coerce_value(work, v, precision)
            if weight:
                v = v * wq
                wq = wq * qw
            total = total + v
            x += 1
        out.append(total)
    return out


def _direct_integer(ctx, f, checkpoints, precision, offset, step, weight):
    p = ctx.p
    out = []
    total = 0
    valid = precision
    mod = p**precision
    qw = pow(ctx.q_mod(mod), weight * step, mod)
    wq = pow(ctx.q_mod(mod), weight * offset, mod)
    x = 0
    for cp in checkpoints:
        while x < cp:
            n = min(CHUNK, cp - x)
            values, k = evaluate_integers(ctx, f, offset + step * x, n, precision, step)
            valid = min(valid, k)
            if weight:
                for v in values:
                    total += v * wq
                    wq = wq * qw % mod
            else:
                total += sum(values)
            total %= mod
            x += n
        out.append(PadicScalar._normalized(p, 0, total, valid))
    return out


def choose_method(f, count, budget, method):
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if method == "auto":
        if count <= budget or not isinstance(f, CFunction):
            method = "direct"
        else:
            method = "closed"
    if method == "direct" and count > budget:
        raise BudgetError(f"{count} terms exceed the budget of {budget}")
    return method


def finite_sums(ctx, f, counts, precision, *, offset=0, step=1, weight=0,
                budget=DEFAULT_BUDGET, method="auto"):
    """sum_{x<X} f(a + s x) q^(w(a + s x)) for each X in counts.

    With method='auto' terms are enumerated while the count fits the budget
    and the closed form takes over beyond it.
    """
    top = max(counts)
    chosen = choose_method(f, top, budget, method)
    if chosen == "closed":
        try:
            return [closed_sum(ctx, f, c, precision, offset, step, weight) for c in counts], chosen
        except NotExactError:
            if method == "closed":
                raise
            raise BudgetError(f"{top} terms exceed the budget of {budget} and no closed form applies")
    return direct_sums(ctx, f, top, precision, counts, offset, step, weight), chosen


def closed_cylinder_sums(ctx, f, n, count, precision):
    """sum_{x<count} f(a + p^n x) for every a < p^n, in closed form.

    The geometric factors depend only on the level, so each cylinder costs one
    pass over the exponential terms.
    """
    if ctx.q_is_one:
        raise NotExactError("closed form unavailable at q = 1")
    p = ctx.p
    try:
        terms = _exp_terms(f, ctx.q_value)
    except TypeError:
        terms = tuple(sorted(exp_poly(f, ctx.q_value).items()))
    size = p**n
    if not terms:
        return [PadicScalar.exact_zero(p)] * size
    vmin = min(valuation_of_rational(c, p) for _, c in terms)
    k = precision - vmin
    mod = p**k
    qm = ctx.q_mod(mod)
    coeffs = []
    for kk, c in terms:
        vc = valuation_of_rational(c, p)
        unit = c / Fraction(p) ** vc
        cu = unit.numerator * pow(unit.denominator, -1, mod) % mod
        g = geometric_mod(ctx, kk * size, count, k)
        coeffs.append((p ** (vc - vmin) * cu * g % mod, pow(qm, kk, mod)))
    totals = [0] * size
    for scale, ratio in coeffs:
        v = scale
        for a in range(size):
            totals[a] += v
            v = v * ratio % mod
    return [PadicScalar._normalized(p, vmin, t, k) for t in totals]
