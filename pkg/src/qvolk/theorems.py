"""Numerical checks of the congruence expansion, the density identity, density
recovery and the decomposition mu = mu_1 + mu_2."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .dist import (
    CylinderDistribution,
    _bracket,
    cylinder_value,
    distribution_from_function,
    invariance_report,
    level_sums,
)
from .errors import DecompositionError, NotIntegralError
from .funcexpr import (
    CFunction,
    Const,
    QBinom,
    QPower,
    Scale,
    _make_sum,
    eval_function,
    evaluate_integers,
    qpoly_coeffs,
    qpoly_eval_derivatives,
)
from .mahler import solve_linear
from .padic import PadicScalar
from .qcalc import QContext, qint, qpow
from .summation import DEFAULT_BUDGET
from .volkenborn import qbernoulli_closed, riemann_sum


@dataclass(frozen=True)
class CongruenceCheck:
    lhs: PadicScalar  # [p^n]_q mu_{P,q}(a + p^n Z_p)
    rhs: PadicScalar  # truncated series
    residual_norm: Fraction  # |lhs - rhs|
    scaled_residual: Fraction  # |lhs - rhs| / |[p^n]_q|
    bound: Fraction  # |[p^n]_q|
    variant_rhs: PadicScalar  # beta_0 P(a) - beta_1 P'(a) [p^n]_q
    variant_scaled_residual: Fraction
    terms: int


def _beta_list(ctx, n, count):
    work = ctx.power_of_q(ctx.p**n)
    return [qbernoulli_closed(work, i) for i in range(count)]


def check_congruence12(ctx: QContext, P: CFunction, a: int, n: int, terms: int | None = None,
                       M: int = 6, *, budget=DEFAULT_BUDGET, method="auto") -> CongruenceCheck:
    """Compare [p^n]_q mu_{P,q}(a + p^n Z_p) with the expansion

        sum_{i<terms} P^(i)(a)/i! beta_{i,q^(p^n)} [p^n]_q^i q^(a i)

    where P^(i) is the i-th derivative in [x]_q.  With terms = 2 the scaled
    residual is the congruence modulo [p^n]_q.  The variant with the
    opposite sign and no q^a on the linear term is reported, not asserted.
    """
    coeffs = qpoly_coeffs(P, ctx)
    degree = len(coeffs) - 1
    terms = degree + 1 if terms is None else terms
    if not 1 <= terms <= degree + 1 and not (degree == 0 and terms >= 1):
        raise ValueError(f"terms must lie in [1, {degree + 1}]")
    p = ctx.p
    bracket = _bracket(ctx, n)
    lhs = bracket * cylinder_value(ctx, P, a, n, M, budget=budget, method=method)
    need = max(terms, 2)
    work = ctx.with_precision(ctx.precision + need * n + 2)
    derivs = qpoly_eval_derivatives(work, P, a, need)
    betas = _beta_list(work, n, need)
    qa = qpow(work, a)
    br = qint(work, p**n)
    parts = [derivs[i] / factorial(i) * betas[i] * br**i * qa**i for i in range(need)]
    rhs = parts[0]
    for t in parts[1:terms]:
        rhs = rhs + t
    rhs = rhs.truncate(ctx.precision)
    variant = (betas[0] * derivs[0] - betas[1] * derivs[1] * br).truncate(ctx.precision)
    residual = (lhs - rhs).norm
    scale = bracket.norm
    return CongruenceCheck(
        lhs, rhs, residual, residual / scale, scale, variant, (lhs - variant).norm / scale, terms
    )


@dataclass(frozen=True)
class DensityCheck:
    lhs: PadicScalar  # sum_{i<p^N} g(i) mu_{P,q}(i + p^N Z_p)
    rhs: PadicScalar  # level-(N+M) Riemann sum of g P q^(-x)
    defect: Fraction
    method: str


def _values(ctx, g, count, precision):
    try:
        values, k = evaluate_integers(ctx, g, 0, count, precision)
        return [PadicScalar._normalized(ctx.p, 0, v, k) for v in values]
    except NotIntegralError:
        work = ctx.with_precision(precision)
        return [eval_function(work, g, i) for i in range(count)]


def check_density_theorem3(ctx: QContext, P: CFunction, g: CFunction, N: int, M: int, *,
                           budget=DEFAULT_BUDGET, method="auto") -> DensityCheck:
    """Integrating g against mu_{P,q} versus integrating g P q^(-x) against mu_q."""
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    p = ctx.p
    prec = ctx.precision + N + M
    sums, chosen = level_sums(ctx, P, N, M, prec, budget=budget, method=method)
    weights = _values(ctx, g, p**N, prec)
    total = PadicScalar.exact_zero(p)
    for w, s in zip(weights, sums):
        total = total + w * s
    denom = qint(ctx.with_precision(prec + N + M), p ** (N + M))
    lhs = (total / denom).truncate(ctx.precision)
    integrand = g * P * QPower(-1)
    rhs = riemann_sum(ctx, integrand, N + M, budget=budget, method=method)
    return DensityCheck(lhs, rhs, (lhs - rhs).norm, chosen)


@dataclass(frozen=True)
class RecoveryCheck:
    target: PadicScalar  # f(a)
    approximants: list  # [p^n]_q mu_{f,q}(a + p^n Z_p), n = 0..n_max
    differences: list  # |f(a) - approximant_n|
    constant: Fraction  # max_{n>=1} differences_n * p^n
    inner_level: int


def check_rn_recovery(ctx: QContext, f: CFunction, a: int, n_max: int, M: int = 6, *,
                      budget=DEFAULT_BUDGET, method="auto") -> RecoveryCheck:
    """Per-level distance between f(a) and [p^n]_q mu_{f,q}(a + p^n Z_p)."""
    p = ctx.p
    target = eval_function(ctx, f, a)
    approx = [
        _bracket(ctx, n) * cylinder_value(ctx, f, a, n, M, budget=budget, method=method)
        for n in range(n_max + 1)
    ]
    diffs = [(target - v).norm for v in approx]
    const = max((d * p**n for n, d in enumerate(diffs) if n >= 1), default=Fraction(0))
    return RecoveryCheck(target, approx, diffs, const, M)


@dataclass(frozen=True)
class DecompositionResult:
    mu1: CylinderDistribution
    mu2: CylinderDistribution
    bound_M: Fraction  # sup |mu2| over stored cylinders
    exact_sum: bool
    level_bounds: list  # sup |mu2| per level
    density: CFunction  # fitted f_mu as a combination of binom(x, n)_q
    coeffs: list
    fit_residual: Fraction
    classification: str = field(default="strong")


def decompose_theorem4(ctx: QContext, mu: CylinderDistribution, M: int | None = None, *,
                       degree: int = 4, tolerance: Fraction | None = None,
                       budget=DEFAULT_BUDGET, method="auto") -> DecompositionResult:
    """Split a strong distribution as mu = mu_{f,q} + mu_2.

    f is fitted as sum_{n<=degree} a_n binom(x, n)_q so that the deepest
    approximants [p^L]_q mu_{f,q}(a + p^L Z_p) agree with those of mu at
    a = 0..degree; mu_1 = mu_{f,q} is then the same linear combination of
    the basis distributions.  The fit is rejected when the approximants at
    the remaining residues miss by more than ``tolerance``
    (default p^-(L-2)).
    """
    report = invariance_report(mu)
    if not report.strong:
        raise DecompositionError(f"distribution is {report.classification}, not strong")
    p = ctx.p
    L = mu.depth
    M = mu.inner_level if M is None and mu.inner_level else (M or 6)
    degree = min(degree, p**L - 1)
    tolerance = Fraction(1, p ** max(L - 2, 0)) if tolerance is None else tolerance
    basis = [
        distribution_from_function(ctx, QBinom(n), L, M, budget=budget, method=method)
        for n in range(degree + 1)
    ]
    br = _bracket(ctx, L)
    size = p**L
    columns = [[br * v for v in b.level(L)] for b in basis]
    target = [br * v for v in mu.level(L)]
    A = [[columns[n][a] for n in range(degree + 1)] for a in range(degree + 1)]
    coeffs = [c.truncate(ctx.precision) for c in solve_linear(A, target[: degree + 1])]
    residual = Fraction(0)
    for a in range(degree + 1, size):
        fit = PadicScalar.exact_zero(p)
        for n, c in enumerate(coeffs):
            fit = fit + c * columns[n][a]
        residual = max(residual, (fit - target[a]).norm)
    if residual > tolerance:
        raise DecompositionError(f"density fit residual {residual} exceeds {tolerance}")
    table = {}
    for key in mu.table:
        acc = PadicScalar.exact_zero(p)
        for c, b in zip(coeffs, basis):
            acc = acc + c * b.table[key]
        table[key] = acc
    mu1 = CylinderDistribution(ctx, L, table, "from_function", M)
    mu2 = mu - mu1
    exact = all((mu1.table[k] + mu2.table[k] - v).norm == 0 for k, v in mu.table.items())
    level_bounds = [max(v.norm for v in mu2.level(n)) for n in range(L + 1)]
    terms = [Const(c) if n == 0 else Scale(c, QBinom(n)) for n, c in enumerate(coeffs) if c.norm]
    density = _make_sum(terms) if terms else Const(0)
    return DecompositionResult(
        mu1, mu2, max(level_bounds), exact, level_bounds, density, coeffs, residual,
        report.classification,
    )
