from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvolk.errors import DomainError, PrecisionError
from qvolk.padic import (
    INF,
    PadicScalar,
    is_prime,
    make_scalar,
    pexp,
    plog,
    valuation_norm,
    valuation_of_rational,
)

from oracles import digits, log_mod, norm, residue, vp

PRIMES = [2, 3, 5, 7]
PREC = 12

rationals = st.fractions(max_denominator=10**6).filter(lambda x: abs(x) < 10**9)


def test_frozen_examples():
    a = make_scalar(5, 50, 6)
    assert (a.valuation, a.unit, a.abs_precision) == (2, 2, 6)
    assert make_scalar(5, Fraction(1, 2), 4).unit == 313
    assert a.norm == Fraction(1, 25)
    assert make_scalar(3, Fraction(1, 6), 5).valuation == -1


def test_zero_kinds():
    z = make_scalar(5, 0, 6)
    assert z.is_exact_zero and z.norm == 0
    a = make_scalar(5, 7, 6)
    d = a - a
    assert d.is_zero and not d.is_exact_zero
    assert d.abs_precision == 6 and d.norm == 0
    assert valuation_norm(z) == (INF, 0)
    assert str(d) == "5-adic: O(5^6)"
    assert str(z) == "5-adic: 0 (exact)"


def test_text_and_json_round_trip():
    a = make_scalar(5, 50, 6)
    assert a.to_text() == "5-adic: v=2, digits=[2,0,0,0,...]"
    b = PadicScalar.from_json(a.to_json())
    assert b == a and b.abs_precision == a.abs_precision
    assert PadicScalar.from_json(make_scalar(3, 0, 4).to_json()).is_exact_zero


def test_bad_primes_rejected():
    assert not is_prime(1) and not is_prime(9) and is_prime(97)
    with pytest.raises(ValueError):
        make_scalar(4, 1, 5)


def test_division_by_inexact_zero():
    a = make_scalar(5, 3, 6)
    with pytest.raises((PrecisionError, ZeroDivisionError)):
        a / (a - a)


@pytest.mark.parametrize("p", PRIMES)
@given(x=rationals)
@settings(max_examples=40, deadline=None)
def test_digits_match_oracle(p, x):
    if x == 0:
        return
    s = make_scalar(p, x, vp(x, p) + PREC)
    v, ds = digits(x, p, PREC)
    assert s.valuation == v
    assert s.digits() == ds
    assert s.norm == norm(x, p)


@pytest.mark.parametrize("p", PRIMES)
@given(x=rationals, y=rationals)
@settings(max_examples=40, deadline=None)
def test_field_operations_match_rationals(p, x, y):
    a, b = make_scalar(p, x, 30), make_scalar(p, y, 30)
    assert a + b == x + y
    assert a - b == x - y
    assert a * b == x * y
    if y != 0:
        assert a / b == x / y


@pytest.mark.parametrize("p", PRIMES)
@given(x=rationals, y=rationals)
@settings(max_examples=40, deadline=None)
def test_norm_multiplicative_and_ultrametric(p, x, y):
    a, b = make_scalar(p, x, 40), make_scalar(p, y, 40)
    if x and y:
        assert (a * b).norm == a.norm * b.norm
    assert (a + b).norm <= max(a.norm, b.norm)


@pytest.mark.parametrize("p", [3, 5])
@given(x=rationals, y=rationals, z=rationals)
@settings(max_examples=30, deadline=None)
def test_associative_and_distributive(p, x, y, z):
    a, b, c = (make_scalar(p, t, 20) for t in (x, y, z))
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


def test_precision_tracks_cancellation():
    p = 5
    a = make_scalar(p, 1 + 5**3, 10)
    b = make_scalar(p, 1, 10)
    d = a - b
    assert d.valuation == 3 and d.abs_precision == 10


@pytest.mark.parametrize("p,q", [(3, 4), (5, 6), (7, 8), (5, 26), (2, 5)])
def test_plog_matches_limit_oracle(p, q):
    x = make_scalar(p, q, 16)
    lg = plog(x)
    v, u = log_mod(q, p, 10)
    assert lg.valuation == v
    assert lg.residue(v + 10) == u * p**v % p ** (v + 10)


@pytest.mark.parametrize("p,q", [(3, 4), (5, 6), (7, 8), (2, 5)])
def test_exp_log_inverse(p, q):
    x = make_scalar(p, q, 20)
    assert pexp(plog(x)) == x
    assert plog(x * x) == 2 * plog(x)


def test_log_exp_domains():
    with pytest.raises(DomainError):
        plog(make_scalar(5, 2, 10))
    with pytest.raises(DomainError):
        pexp(make_scalar(5, 1, 10))
    with pytest.raises(DomainError):
        plog(make_scalar(2, 3, 10))
    assert pexp(PadicScalar.exact_zero(5)) == 1
    assert plog(make_scalar(5, 1, 10)).is_zero


def test_residue_helper_agrees():
    x = Fraction(22, 7)
    assert make_scalar(5, x, 8).residue(8) == residue(x, 5, 8)
    assert valuation_of_rational(0, 5) == INF
