import json
import warnings
from fractions import Fraction

import pytest

from qvolk.dist import (
    Cylinder,
    CylinderDistribution,
    additivity_defect,
    base_distribution,
    cylinder_value,
    density_values,
    dirac_distribution,
    distribution_from_function,
    invariance_report,
    level_sums,
    lipschitz_estimate,
    rn_derivative,
)
from qvolk.errors import BudgetError
from qvolk.funcexpr import c1_norm_estimate, eval_function, parse_function
from qvolk.padic import PadicScalar, plog
from qvolk.qcalc import QContext, qint

from oracles import mu_base, mu_function, qbracket

CTX = QContext(5, Fraction(6), 20)


def test_cylinder_type():
    assert Cylinder.of(27, 2, 5) == Cylinder(2, 2)
    with pytest.raises(ValueError):
        Cylinder(-1, 2)


def test_base_values():
    d = base_distribution(CTX, 3)
    assert d.value(0, 0) == 1
    assert d.value(2, 1) == Fraction(36, 1555)
    for n in range(4):
        for a in range(0, 5**n, 7):
            assert d.value(a, n) == mu_base(6, 5, a, n)
    assert additivity_defect(d) == 0


def test_perturbation_detected():
    d = base_distribution(CTX, 2)
    table = dict(d.table)
    table[(2, 3)] = table[(2, 3)] + Fraction(1, 5)
    bad = CylinderDistribution(CTX, 2, table)
    assert additivity_defect(bad) >= 5


@pytest.mark.parametrize("method", ["direct", "closed"])
def test_from_function_matches_exact_oracle(method):
    f = parse_function("[x]^2 + q^(2*x)")
    fn = lambda x: qbracket(6, x) ** 2 + Fraction(6) ** (2 * x)  # noqa: E731
    d = distribution_from_function(CTX, f, 2, 3, method=method)
    for n in range(3):
        for a in range(5**n):
            assert d.value(a, n) == mu_function(fn, 6, 5, a, n, 3)
    assert d.inner_level == 3 and d.provenance == "from_function"


def test_routes_and_single_cylinders_agree():
    ctx = QContext(3, Fraction(4), 25)
    f = parse_function("qbinom(x,2) - 3*[x]")
    a = distribution_from_function(ctx, f, 3, 4, method="direct")
    b = distribution_from_function(ctx, f, 3, 4, method="closed")
    assert all((a.table[k] - b.table[k]).norm == 0 for k in a.table)
    assert (cylinder_value(ctx, f, 5, 2, 4) - a.value(5, 2)).norm == 0
    sums, _ = level_sums(ctx, f, 2, 4, 25, method="direct")
    sums2, _ = level_sums(ctx, f, 2, 4, 25, method="closed")
    assert all((x - y).norm == 0 for x, y in zip(sums, sums2))


def test_constant_function_levels():
    # mu_{1,q}(a + p^n Z_p) -> (q - 1)/(p^n log q)
    d = distribution_from_function(CTX, parse_function("1"), 3, 8)
    lq = plog(CTX.q)
    for n in range(4):
        target = (CTX.q - 1) / (5**n * lq)
        assert (d.value(1, n) - target).norm <= Fraction(5 ** (n + 1), 5**8)


def test_linearity():
    f1, f2 = parse_function("[x]^2"), parse_function("q^(-1*x)")
    d1 = distribution_from_function(CTX, f1, 2, 4)
    d2 = distribution_from_function(CTX, f2, 2, 4)
    combo = distribution_from_function(CTX, parse_function("3*[x]^2 + 7*q^(-1*x)"), 2, 4)
    lin = d1.scaled(3) + d2.scaled(7)
    assert all((combo.table[k] - lin.table[k]).norm == 0 for k in combo.table)


def test_norm_bound():
    f = parse_function("q^(2*x) + 3*[x]")
    sup, delta = c1_norm_estimate(CTX, f, 3)
    c1 = max(sup, delta)
    d = distribution_from_function(CTX, f, 3, 5)
    for n in range(4):
        bound = c1 / qint(CTX, 5**n).norm
        assert max(v.norm for v in d.level(n)) <= bound


def test_additivity_of_function_tables():
    for M in (3, 5, 7):
        d = distribution_from_function(CTX, parse_function("[x]^3"), 3, M)
        assert additivity_defect(d) <= Fraction(1, 5 ** (M - 2))


def test_budget():
    with pytest.raises(BudgetError):
        base_distribution(CTX, 6, budget=1000)
    with pytest.raises(BudgetError):
        distribution_from_function(CTX, parse_function("[x]"), 3, 4, budget=1000, method="direct")


def test_base_invariance():
    r = invariance_report(base_distribution(CTX, 4))
    # |q^(a mod p^n) - q^(a mod p^(n+1))| = |q - 1| p^-n
    assert r.deltas == [Fraction(1, 5 ** (n + 1)) for n in range(4)]
    assert r.strong_constants == [Fraction(1, 5)] * 4
    assert r.strong and r.weak
    assert r.admissible_c == [1] * 5 and not r.admissible


def test_polynomial_strong():
    d = distribution_from_function(CTX, parse_function("[x]^2"), 4, 6)
    r = invariance_report(d)
    assert r.strong
    for n, dl in enumerate(r.deltas):
        assert dl <= r.c / 5**n
    # strong => |approx_n - approx_m| <= C p^-min(n, m)
    for x in (0, 3, 17):
        approx = rn_derivative(d, x).approximants
        for n in range(5):
            for m in range(n + 1, 5):
                assert (approx[n] - approx[m]).norm <= r.c / 5**n


def test_dirac_is_admissible_and_weak():
    d = dirac_distribution(CTX, 4)
    r = invariance_report(d)
    assert r.admissible_c == [Fraction(1, 5**n) for n in range(5)]
    assert r.admissible and r.weak
    assert additivity_defect(d) == 0


def test_not_weak():
    # approximants oscillate without decay
    r = invariance_report(_oscillating(4))
    assert r.classification == "neither" and not r.weak


def test_rn_derivative():
    base = base_distribution(CTX, 4)
    rn = rn_derivative(base, 3)
    # the level-n approximant is q^(x mod p^n)
    assert rn.approximants[0] == 1
    assert all(v == Fraction(6) ** 3 for v in rn.approximants[1:])
    assert rn.defects[1:] == [0, 0, 0]
    f = parse_function("q^(2*x) + [x]")
    d = distribution_from_function(CTX, f, 4, 6)
    rn = rn_derivative(d, 1)
    assert (rn.value - eval_function(CTX, f, 1)).norm <= Fraction(1, 5**4)
    with pytest.raises(ValueError):
        rn_derivative(d, 1, 7)


def test_lipschitz():
    assert lipschitz_estimate(base_distribution(CTX, 4)) == Fraction(1, 5)
    table = {}
    for n in range(4):
        for a in range(5**n):
            table[(n, a)] = CTX.scalar(7) / qint(CTX.with_precision(30), 5**n)
    assert lipschitz_estimate(CylinderDistribution(CTX, 3, table)) == 0
    f = parse_function("[x]^3")
    est = [lipschitz_estimate(distribution_from_function(CTX, f, L, 6)) for L in (3, 4)]
    assert est[0] == est[1] == 1
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lipschitz_estimate(_oscillating(4))
    assert any("not classified strong" in str(w.message) for w in caught)


def _oscillating(L):
    table = {}
    for n in range(L + 1):
        for a in range(5**n):
            table[(n, a)] = CTX.scalar((-1) ** n) / qint(CTX.with_precision(30), 5**n)
    return CylinderDistribution(CTX, L, table)


def test_density_values():
    d = distribution_from_function(CTX, parse_function("[x]"), 2, 6)
    vals = density_values(d)
    assert len(vals) == 25
    assert (vals[7] - qbracket(6, 7)).norm <= Fraction(1, 25)


def test_json_round_trip(tmp_path):
    d = distribution_from_function(CTX, parse_function("[x]^2"), 2, 4)
    path = tmp_path / "table.json"
    path.write_text(json.dumps(d.to_json()))
    back = CylinderDistribution.from_json(json.loads(path.read_text()))
    assert back.depth == 2 and back.provenance == "custom" and back.inner_level == 4
    assert all(back.table[k] == v for k, v in d.table.items())
    obj = d.to_json()
    obj["entries"] = obj["entries"][:-1]
    with pytest.raises(ValueError):
        CylinderDistribution.from_json(obj)


def test_difference_and_compatibility():
    a = base_distribution(CTX, 2)
    diff = a - a
    assert diff.provenance == "difference"
    assert all(v.is_zero for v in diff.table.values())
    with pytest.raises(ValueError):
        a - base_distribution(CTX, 3)
    assert isinstance(a.truncated(1).value(0, 1), PadicScalar)
