"""Cylinder distributions on Z_p as finite-depth tables.

A table stores mu(a + p^n Z_p) for every 0 <= n <= depth and 0 <= a < p^n.
Limits are never claimed: the Radon-Nikodym derivative is reported as the
sequence of approximants [p^n]_q mu(x + p^n Z_p) with its defects.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetError, NotExactError, NotIntegralError
from .funcexpr import CFunction, evaluate_integers
from .padic import PadicScalar
from .qcalc import QContext, qint
from .summation import DEFAULT_BUDGET, METHODS, closed_cylinder_sums, direct_sums

PROVENANCES = ("base", "from_function", "difference", "custom")


@dataclass(frozen=True)
class Cylinder:
    a: int
    n: int

    def __post_init__(self):
        if self.n < 0 or not 0 <= self.a:
            raise ValueError("need n >= 0 and a >= 0")

    @classmethod
    def of(cls, a, n, p):
        return cls(a % p**n, n)


@dataclass(frozen=True)
class CylinderDistribution:
    ctx: QContext
    depth: int
    table: dict = field(repr=False)  # (n, a) -> PadicScalar
    provenance: str = "custom"
    inner_level: int | None = None
    method: str | None = None

    def value(self, a, n):
        return self.table[(n, a % self.ctx.p**n)]

    def level(self, n):
        p = self.ctx.p
        return [self.table[(n, a)] for a in range(p**n)]

    def approximant(self, a, n):
        """[p^n]_q mu(a + p^n Z_p)"""
        return _bracket(self.ctx, n) * self.value(a, n)

    def __sub__(self, other):
        _check_compatible(self, other)
        table = {k: v - other.table[k] for k, v in self.table.items()}
        return CylinderDistribution(self.ctx, self.depth, table, "difference")

    def __add__(self, other):
        _check_compatible(self, other)
        table = {k: v + other.table[k] for k, v in self.table.items()}
        return CylinderDistribution(self.ctx, self.depth, table, "custom")

    def scaled(self, c):
        return CylinderDistribution(
            self.ctx, self.depth, {k: c * v for k, v in self.table.items()}, "custom"
        )

    def truncated(self, depth):
        if depth > self.depth:
            raise ValueError("cannot deepen a table")
        table = {k: v for k, v in self.table.items() if k[0] <= depth}
        return CylinderDistribution(
            self.ctx, depth, table, self.provenance, self.inner_level, self.method
        )

    def to_json(self):
        ctx = self.ctx
        return {
            "schema": 1,
            "p": ctx.p,
            "q": str(ctx.q_value),
            "precision": ctx.precision,
            "depth": self.depth,
            "provenance": self.provenance,
            "inner_level": self.inner_level,
            "entries": [
                {"a": a, "n": n, "value": v.to_json()} for (n, a), v in sorted(self.table.items())
            ],
        }

    @classmethod
    def from_json(cls, obj, precision=None):
        ctx = QContext(obj["p"], Fraction(obj["q"]), precision or obj.get("precision", 20))
        table = {(e["n"], e["a"]): PadicScalar.from_json(e["value"]) for e in obj["entries"]}
        depth = obj["depth"]
        p = ctx.p
        for n in range(depth + 1):
            for a in range(p**n):
                if (n, a) not in table:
                    raise ValueError(f"missing entry a={a}, n={n}")
        return cls(ctx, depth, table, "custom", obj.get("inner_level"))


def _check_compatible(d1, d2):
    if d1.ctx.p != d2.ctx.p or d1.ctx.q_value != d2.ctx.q_value or d1.depth != d2.depth:
        raise ValueError("distributions differ in p, q or depth")


def _bracket(ctx, n):
    return qint(ctx.with_precision(ctx.precision + n), ctx.p**n)


def _table_size(p, depth):
    return sum(p**n for n in range(depth + 1))


def _check_table_budget(p, depth, budget):
    if _table_size(p, depth) > budget:
        raise BudgetError(f"a depth-{depth} table has {_table_size(p, depth)} cylinders")


def base_distribution(ctx: QContext, L: int, *, budget=DEFAULT_BUDGET) -> CylinderDistribution:
    """mu_q(a + p^n Z_p) = q^a / [p^n]_q for all n <= L."""
    p = ctx.p
    _check_table_budget(p, L, budget)
    work = ctx.with_precision(ctx.precision + 2 * L)
    mod = p**work.precision
    qm = ctx.q_mod(mod)
    table = {}
    for n in range(L + 1):
        denom = qint(work, p**n)
        v = 1
        for a in range(p**n):
            table[(n, a)] = (work.scalar(v) / denom).truncate(ctx.precision)
            v = v * qm % mod
    return CylinderDistribution(ctx, L, table, "base")


def dirac_distribution(ctx: QContext, L: int, point: int = 0) -> CylinderDistribution:
    """The point mass at an integer: 1 on cylinders containing it, else 0."""
    p = ctx.p
    table = {}
    for n in range(L + 1):
        for a in range(p**n):
            hit = (point - a) % p**n == 0
            table[(n, a)] = ctx.scalar(1) if hit else PadicScalar.exact_zero(p)
    return CylinderDistribution(ctx, L, table, "custom")


def cylinder_value(ctx: QContext, f: CFunction, a: int, n: int, M: int, *,
                   budget=DEFAULT_BUDGET, method="auto") -> PadicScalar:
    """mu_{f,q}(a + p^n Z_p) at inner level M for a single cylinder."""
    p = ctx.p
    count = p**M
    prec = ctx.precision + n + M
    use_closed = method == "closed" or (method == "auto" and count > budget)
    if method == "direct" and count > budget:
        raise BudgetError(f"{count} terms exceed the budget of {budget}")
    if use_closed:
        from .summation import closed_sum

        try:
            s = closed_sum(ctx, f, count, prec, offset=a, step=p**n)
        except NotExactError:
            if method == "closed":
                raise
            raise BudgetError(f"{count} terms exceed the budget of {budget}") from None
    else:
        s = direct_sums(ctx, f, count, prec, offset=a, step=p**n)[0]
    return (s / _bracket(ctx.with_precision(prec), n + M)).truncate(ctx.precision)


def distribution_from_function(ctx: QContext, f: CFunction, L: int, M: int, *,
                               budget=DEFAULT_BUDGET, method="auto") -> CylinderDistribution:
    """mu_{f,q}(a + p^n Z_p) ~ (1/[p^(n+M)]_q) sum_{x<p^M} f(a + p^n x), n <= L.

    Enumeration evaluates f once on [0, p^(L+M)) and groups by residue; past
    the budget the table is built from the exponential form of f.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    p = ctx.p
    _check_table_budget(p, L, budget)
    total_terms = p ** (L + M)
    if method == "auto":
        method = "direct" if total_terms <= budget or ctx.q_is_one else "closed"
    if method == "direct" and total_terms > budget:
        raise BudgetError(f"{total_terms} terms exceed the budget of {budget}")
    table = {}
    prec = ctx.precision + L + M
    wide = ctx.with_precision(prec + L + M)
    if method == "closed":
        for n in range(L + 1):
            denom = qint(wide, p ** (n + M))
            sums = closed_cylinder_sums(ctx, f, n, p**M, prec)
            for a, s in enumerate(sums):
                table[(n, a)] = (s / denom).truncate(ctx.precision)
    else:
        levels = _direct_level_sums(ctx, f, L, M, prec)
        for n, sums in enumerate(levels):
            denom = qint(wide, p ** (n + M))
            for a, s in enumerate(sums):
                table[(n, a)] = (s / denom).truncate(ctx.precision)
    return CylinderDistribution(ctx, L, table, "from_function", M, method)


def _direct_level_sums(ctx, f, L, M, prec, levels=None):
    p = ctx.p
    levels = range(L + 1) if levels is None else levels
    top = p ** (L + M)
    try:
        values, k = evaluate_integers(ctx, f, 0, top, prec)
    except NotIntegralError:
        return _direct_level_sums_scalar(ctx, f, M, prec, levels)
    mod = p**k
    out = []
    for n in levels:
        size = p**n
        sums = [0] * size
        for y in range(p ** (n + M)):
            sums[y % size] += values[y]
        out.append([PadicScalar._normalized(p, 0, s % mod, k) for s in sums])
    return out


def _direct_level_sums_scalar(ctx, f, M, prec, levels):
    p = ctx.p
    out = []
    for n in levels:
        out.append([direct_sums(ctx, f, p**M, prec, offset=a, step=p**n)[0] for a in range(p**n)])
    return out


def level_sums(ctx: QContext, f: CFunction, n: int, M: int, precision: int, *,
               budget=DEFAULT_BUDGET, method="auto"):
    """Raw sums sum_{x<p^M} f(a + p^n x) for every a < p^n, known to ``precision``.

    Returns ``(sums, method_used)``.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    p = ctx.p
    total_terms = p ** (n + M)
    if method == "auto":
        method = "direct" if total_terms <= budget or ctx.q_is_one else "closed"
    if method == "direct":
        if total_terms > budget:
            raise BudgetError(f"{total_terms} terms exceed the budget of {budget}")
        return _direct_level_sums(ctx, f, n, M, precision, [n])[0], method
    if p**n > budget:
        raise BudgetError(f"{p**n} cylinders exceed the budget of {budget}")
    return closed_cylinder_sums(ctx, f, n, p**M, precision), method


def additivity_defect(d: CylinderDistribution) -> Fraction:
    """max over stored parents of |mu(parent) - sum of its p children|."""
    p = d.ctx.p
    worst = Fraction(0)
    for n in range(d.depth):
        for a in range(p**n):
            children = d.table[(n + 1, a)]
            for i in range(1, p):
                children = children + d.table[(n + 1, a + i * p**n)]
            worst = max(worst, (d.table[(n, a)] - children).norm)
    return worst


@dataclass(frozen=True)
class InvarianceReport:
    deltas: list  # delta_n for n = 0..depth-1
    strong_constants: list  # delta_n * p^n
    c: Fraction  # fitted strong constant: max of strong_constants
    classification: str  # "strong", "weak" or "neither"
    admissible_c: list  # max_a |[p^n]_q| |mu(a + p^n Z_p)| for n = 0..depth
    admissible: bool

    @property
    def strong(self):
        return self.classification == "strong"

    @property
    def weak(self):
        return self.classification in ("strong", "weak")


def _within_factor(values, factor):
    if all(v == 0 for v in values):
        return True
    if any(v == 0 for v in values):
        return False
    return max(values) <= factor * min(values)


def _decreasing_to_zero(values):
    tail = values[-3:]
    if len(tail) < 3:
        return False
    return all(b < a or b == 0 for a, b in zip(tail, tail[1:]))


def invariance_report(d: CylinderDistribution) -> InvarianceReport:
    """Level-to-level defects of [p^n]_q mu and the strong/weak/admissible verdicts.

    delta_n = max over integers a of
    |[p^n]_q mu(a + p^n Z_p) - [p^(n+1)]_q mu(a + p^(n+1) Z_p)|,
    i.e. over a < p^(n+1) paired with its parent a mod p^n.
    Strong: delta_n p^n within a factor p across the last three levels.
    Weak: delta_n decreasing (or zero) over the last three levels.
    1-admissible: the same decay test on |[p^n]_q| max_a |mu(a + p^n Z_p)|.
    """
    ctx = d.ctx
    p = ctx.p
    approx = []
    for n in range(d.depth + 1):
        br = _bracket(ctx, n)
        approx.append([br * v for v in d.level(n)])
    deltas = []
    for n in range(d.depth):
        size = p**n
        worst = Fraction(0)
        for a, v in enumerate(approx[n + 1]):
            worst = max(worst, (approx[n][a % size] - v).norm)
        deltas.append(worst)
    consts = [dl * p**n for n, dl in enumerate(deltas)]
    adm = [max(v.norm for v in level) for level in approx]
    strong = len(consts) >= 3 and _within_factor(consts[-3:], p)
    weak = strong or _decreasing_to_zero(deltas)
    classification = "strong" if strong else "weak" if weak else "neither"
    return InvarianceReport(
        deltas, consts, max(consts, default=Fraction(0)), classification, adm,
        _decreasing_to_zero(adm),
    )


@dataclass(frozen=True)
class RNDerivative:
    x: int
    approximants: list  # [p^n]_q mu(x + p^n Z_p), n = 0..n_max
    defects: list  # |approx_{n+1} - approx_n|
    value: PadicScalar  # deepest approximant


def rn_derivative(d: CylinderDistribution, x: int, n_max: int | None = None) -> RNDerivative:
    """Approximants of f_mu(x) = lim [p^N]_q mu(x + p^N Z_p)."""
    n_max = d.depth if n_max is None else n_max
    if n_max > d.depth:
        raise ValueError("n_max exceeds the table depth")
    approx = [d.approximant(x, n) for n in range(n_max + 1)]
    defects = [(b - a).norm for a, b in zip(approx, approx[1:])]
    return RNDerivative(x, approx, defects, approx[-1])


def density_values(d: CylinderDistribution, n: int | None = None) -> list:
    """Deepest approximants f_mu(x) for every residue x < p^n (default: depth)."""
    n = d.depth if n is None else n
    br = _bracket(d.ctx, n)
    return [br * v for v in d.level(n)]


def lipschitz_estimate(d: CylinderDistribution, report: InvarianceReport | None = None) -> Fraction:
    """Empirical Lipschitz constant of f_mu from the deepest approximants.

    max over x != y < p^depth of |f(x) - f(y)| / |x - y|, computed as
    max_j p^j max_x |f(x) - f(x mod p^j)| (ultrametric reduction of the pair
    search).  Warns when the table is not classified strong.
    """
    report = report or invariance_report(d)
    if not report.strong:
        warnings.warn("Lipschitz estimate for a distribution not classified strong", stacklevel=2)
    p = d.ctx.p
    values = density_values(d)
    best = Fraction(0)
    for j in range(d.depth):
        size = p**j
        worst = Fraction(0)
        for x, v in enumerate(values):
            worst = max(worst, (v - values[x % size]).norm)
        best = max(best, worst * size)
    return best
