from fractions import Fraction

import pytest

from qvolk.errors import BudgetError
from qvolk.funcexpr import parse_function
from qvolk.qcalc import QContext
from qvolk.summation import closed_sum, direct_sums, finite_sums
from qvolk.volkenborn import (
    bernoulli_integrand,
    bernoulli_number,
    decays,
    integrate,
    qbernoulli_closed,
    qbernoulli_integral,
    qbernoulli_poly,
    qbernoulli_table,
    riemann_sum,
)

from oracles import BERNOULLI, beta0_mod, qbracket, riemann_sum_exact

CASES = [(3, 4), (5, 6), (7, 8)]


@pytest.mark.parametrize("p,q", CASES)
@pytest.mark.parametrize("text,fn", [
    ("1", lambda q: lambda x: 1),
    ("[x]^2", lambda q: lambda x: qbracket(q, x) ** 2),
    ("q^(-1*x)*[x]", lambda q: lambda x: Fraction(q) ** -x * qbracket(q, x)),
])
def test_riemann_sum_matches_exact_rational(p, q, text, fn):
    ctx = QContext(p, Fraction(q), 15)
    for N in (1, 2, 3):
        got = riemann_sum(ctx, parse_function(text), N)
        assert got == riemann_sum_exact(fn(q), q, p, N)


@pytest.mark.parametrize("p,q", CASES)
def test_routes_agree(p, q):
    ctx = QContext(p, Fraction(q), 25)
    f = parse_function("q^(2*x) + 3*[x]*[x] - qbinom(x,2)")
    for N in (2, 4):
        a = riemann_sum(ctx, f, N, method="direct")
        b = riemann_sum(ctx, f, N, method="closed")
        assert (a - b).norm == 0
    a = direct_sums(ctx, f, 50, 20, offset=3, step=p, weight=1)[0]
    b = closed_sum(ctx, f, 50, 20, offset=3, step=p, weight=1)
    assert (a - b).norm == 0


def test_callable_integrand():
    ctx = QContext(5, Fraction(6), 15)
    got = riemann_sum(ctx, lambda x: x * x, 2)
    assert got == riemann_sum_exact(lambda x: x * x, 6, 5, 2)


def test_budget_enforced():
    ctx = QContext(5, Fraction(6), 10)
    with pytest.raises(BudgetError):
        riemann_sum(ctx, parse_function("[x]"), 6, budget=1000, method="direct")
    with pytest.raises(BudgetError):
        finite_sums(ctx, lambda x: x, [10**4], 10, budget=100)
    # past the budget a CFunction switches to the closed route
    assert riemann_sum(ctx, parse_function("1"), 9, budget=1000) == 1


def test_mass_one_exactly():
    ctx = QContext(5, Fraction(6), 20)
    for N in range(1, 9):
        s = riemann_sum(ctx, parse_function("1"), N)
        assert (s - 1).norm == 0 and s.abs_precision >= 20


def test_integrate_reports_defects():
    ctx = QContext(5, Fraction(6), 20)
    res = integrate(ctx, bernoulli_integrand(2), 2, 6)
    assert res.levels_used == [2, 3, 4, 5, 6]
    assert len(res.successive_defects) == 4
    assert res.converged
    with pytest.raises(ValueError):
        integrate(ctx, bernoulli_integrand(2), 3, 3)
    flat = integrate(ctx, parse_function("1"), 2, 5)
    assert flat.successive_defects == [0, 0, 0] and flat.converged


def test_decays():
    assert decays([Fraction(1), Fraction(1, 5), Fraction(1, 25)])
    assert decays([1, 0, 0])
    assert not decays([1, 1, 1])
    assert not decays([1, Fraction(1, 2)])


def test_bernoulli_numbers():
    assert [bernoulli_number(m) for m in range(len(BERNOULLI))] == BERNOULLI


@pytest.mark.parametrize("p,q", CASES)
def test_beta0_matches_limit_oracle(p, q):
    ctx = QContext(p, Fraction(q), 15)
    assert qbernoulli_closed(ctx, 0).residue(12) == beta0_mod(q, p, 12)


@pytest.mark.parametrize("p,q,N", [(3, 4, 8), (5, 6, 6), (7, 8, 5)])
def test_closed_form_matches_integral(p, q, N):
    ctx = QContext(p, Fraction(q), 20)
    for m in range(5):
        diff = qbernoulli_closed(ctx, m) - qbernoulli_integral(ctx, m, N)
        assert diff.norm <= Fraction(1, p ** (N - 2))


def test_classical_case():
    # at q = 1 the Riemann sums are classical Volkenborn sums and tend to B_m
    ctx = QContext(5, Fraction(1), 12)
    for m in range(5):
        s = riemann_sum(ctx, parse_function("*".join(["[x]"] * m) or "1"), 7)
        assert (s - BERNOULLI[m]).norm <= Fraction(1, 5**5)
    assert qbernoulli_closed(ctx, 4) == Fraction(-1, 30)


def test_tables_and_polynomials():
    ctx = QContext(5, Fraction(6), 20)
    closed = qbernoulli_table(ctx, 3)
    assert closed.method == "closed" and len(closed.beta) == 4
    integral = qbernoulli_table(ctx, 3, "integral", 6)
    for a, b in zip(closed.beta, integral.beta):
        assert (a - b).norm <= Fraction(1, 5**4)
    for n in range(4):
        assert qbernoulli_poly(ctx, n, 0) == closed.beta[n]
    with pytest.raises(ValueError):
        qbernoulli_table(ctx, 2, "bogus")
