"""Expression trees for C^1 functions Z_p -> Q_p built from q-primitives.

Grammar accepted by :func:`parse_function` (whitespace is ignored)::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := atom ('^' uint)*
    atom   := uint | '[x]' | 'q^(' int '*x)' | 'qbinom(x,' uint ')' | '(' expr ')'

Every tree is also a finite combination of q^(kx) (see :func:`exp_poly`),
which is what makes closed-form Riemann sums possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import FunctionSyntaxError, NotExactError, NotIntegralError, NotPolynomialError
from .padic import PadicScalar, valuation_of_rational
from .qcalc import QContext, qbinom, qfactorial_exact, qint, qint_mod, qpow


class CFunction:
    """Base class of expression nodes."""

    def __add__(self, other):
        return Sum((self, _wrap(other)))

    def __radd__(self, other):
        return Sum((_wrap(other), self))

    def __sub__(self, other):
        return Sum((self, Scale(-1, _wrap(other))))

    def __mul__(self, other):
        return Product((self, _wrap(other)))

    def __rmul__(self, other):
        return Product((_wrap(other), self))

    def __str__(self):
        return to_text(self)


def _wrap(x):
    return x if isinstance(x, CFunction) else Const(x)


@dataclass(frozen=True, eq=True)
class Const(CFunction):
    value: object  # int, Fraction or PadicScalar


@dataclass(frozen=True)
class QBracket(CFunction):
    """x -> [x]_q"""


@dataclass(frozen=True)
class QPower(CFunction):
    """x -> q^(c x)"""

    c: int


@dataclass(frozen=True)
class QBinom(CFunction):
    """x -> binom(x, n)_q"""

    n: int


@dataclass(frozen=True)
class Sum(CFunction):
    terms: tuple


@dataclass(frozen=True)
class Product(CFunction):
    factors: tuple


@dataclass(frozen=True)
class Scale(CFunction):
    coeff: object
    child: CFunction


# ---------------------------------------------------------------------------
# parsing and printing


class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def error(self, message, pos=None):
        raise FunctionSyntaxError(message, self.pos if pos is None else pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, literal):
        self.skip()
        if not self.text.startswith(literal, self.pos):
            found = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            self.error(f"expected {literal!r}, found {found!r}")
        self.pos += len(literal)

    def integer(self, signed=False):
        self.skip()
        start = self.pos
        if signed and self.peek() == "-":
            self.pos += 1
            self.skip()
        digits_at = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == digits_at:
            self.error("expected an integer")
        return int(self.text[start:self.pos].replace(" ", ""))

    def parse(self):
        node = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return node

    def expr(self):
        terms = [self.term()]
        while self.peek() in ("+", "-"):
            op = self.peek()
            self.pos += 1
            t = self.term()
            terms.append(t if op == "+" else Scale(-1, t))
        return _make_sum(terms)

    def term(self):
        factors = [self.factor()]
        while self.peek() == "*":
            self.pos += 1
            factors.append(self.factor())
        return _make_product(factors)

    def factor(self):
        node = self.atom()
        while self.peek() == "^":
            self.pos += 1
            n = self.integer()
            node = Const(1) if n == 0 else _make_product([node] * n)
        return node

    def atom(self):
        c = self.peek()
        start = self.pos
        if c.isdigit():
            return Const(self.integer())
        if c == "[":
            self.pos += 1
            self.expect("x")
            self.expect("]")
            return QBracket()
        if c == "(":
            self.pos += 1
            node = self.expr()
            self.expect(")")
            return node
        if self.text.startswith("qbinom", self.pos):
            self.pos += len("qbinom")
            self.expect("(")
            self.expect("x")
            self.expect(",")
            n = self.integer()
            self.expect(")")
            return QBinom(n)
        if c == "q":
            self.pos += 1
            self.expect("^")
            self.expect("(")
            k = self.integer(signed=True)
            self.expect("*")
            self.expect("x")
            self.expect(")")
            return QPower(k)
        if not c:
            self.error("unexpected end of input")
        self.error(f"unknown symbol {c!r}", start)


def _make_sum(terms):
    flat = []
    for t in terms:
        flat.extend(t.terms if isinstance(t, Sum) else (t,))
    return flat[0] if len(flat) == 1 else Sum(tuple(flat))


def _make_product(factors):
    flat = []
    for f in factors:
        flat.extend(f.factors if isinstance(f, Product) else (f,))
    return flat[0] if len(flat) == 1 else Product(tuple(flat))


def parse_function(text: str) -> CFunction:
    """Parse function text into its canonical tree (sums and products flattened)."""
    return _Parser(text).parse()


def _const_text(value):
    if isinstance(value, PadicScalar):
        value = value.lift()
    value = Fraction(value)
    if value.denominator == 1 and value >= 0:
        return str(value.numerator)
    # not expressible in the grammar; kept readable
    return f"({value})"


def to_text(f: CFunction) -> str:
    """Print a tree; parse(to_text(parse(s))) == parse(s)."""
    if isinstance(f, Const):
        return _const_text(f.value)
    if isinstance(f, QBracket):
        return "[x]"
    if isinstance(f, QPower):
        return f"q^({f.c}*x)"
    if isinstance(f, QBinom):
        return f"qbinom(x,{f.n})"
    if isinstance(f, Sum):
        parts = [_term_text(f.terms[0])]
        for t in f.terms[1:]:
            if isinstance(t, Scale) and _is_minus_one(t.coeff):
                parts.append(f" - {_term_text(t.child)}")
            else:
                parts.append(f" + {_term_text(t)}")
        return "".join(parts)
    if isinstance(f, Product):
        return "*".join(_factor_text(x) for x in f.factors)
    if isinstance(f, Scale):
        if _is_minus_one(f.coeff):
            return f"(0 - {_term_text(f.child)})"
        return f"{_const_text(f.coeff)}*{_factor_text(f.child)}"
    raise TypeError(f"not a CFunction node: {f!r}")


def _is_minus_one(c):
    return not isinstance(c, PadicScalar) and c == -1


def _term_text(f):
    text = to_text(f)
    return f"({text})" if isinstance(f, Sum) else text


def _factor_text(f):
    text = to_text(f)
    return f"({text})" if isinstance(f, (Sum, Scale)) else text


# ---------------------------------------------------------------------------
# evaluation


def _const_scalar(ctx, value):
    if isinstance(value, PadicScalar):
        return value
    return ctx.scalar(value)


def eval_function(ctx: QContext, f: CFunction, x) -> PadicScalar:
    """f(x) for x an int or a PadicScalar in Z_p."""
    if isinstance(f, Const):
        return _const_scalar(ctx, f.value)
    if isinstance(f, QBracket):
        return qint(ctx, x)
    if isinstance(f, QPower):
        return qpow(ctx, f.c * x)
    if isinstance(f, QBinom):
        return qbinom(ctx, x, f.n)
    if isinstance(f, Sum):
        out = eval_function(ctx, f.terms[0], x)
        for t in f.terms[1:]:
            out = out + eval_function(ctx, t, x)
        return out
    if isinstance(f, Product):
        out = eval_function(ctx, f.factors[0], x)
        for t in f.factors[1:]:
            out = out * eval_function(ctx, t, x)
        return out
    if isinstance(f, Scale):
        return _const_scalar(ctx, f.coeff) * eval_function(ctx, f.child, x)
    raise TypeError(f"not a CFunction node: {f!r}")


def delta1(ctx: QContext, f: CFunction, m, x) -> PadicScalar:
    """Difference quotient (f(x+m) - f(x))/m."""
    if isinstance(m, PadicScalar):
        if m.is_exact_zero:
            raise ZeroDivisionError("delta1 needs m != 0")
    elif m == 0:
        raise ZeroDivisionError("delta1 needs m != 0")
    return (eval_function(ctx, f, x + m) - eval_function(ctx, f, x)) / m


# ---------------------------------------------------------------------------
# the q-polynomial subclass and formal d/d[x]_q


def _poly_add(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def qpoly_coeffs(f: CFunction, ctx: QContext | None = None) -> list:
    """Coefficients c_i with f = sum c_i [x]_q^i.

    q^(cx) with c >= 0 is rewritten through q^x = 1 + (q-1)[x]_q, which needs
    ``ctx``; QBinom and negative powers are outside the subclass.
    """
    if isinstance(f, Const):
        return [f.value]
    if isinstance(f, QBracket):
        return [0, 1]
    if isinstance(f, QPower):
        if f.c < 0:
            raise NotPolynomialError(f"q^({f.c}x) is not a polynomial in [x]_q")
        if ctx is None:
            raise NotPolynomialError("rewriting q^(cx) needs a QContext")
        out = [1]
        for _ in range(f.c):
            out = _poly_mul(out, [1, ctx.q_value - 1])
        return out
    if isinstance(f, QBinom):
        raise NotPolynomialError("QBinom nodes are not formally differentiated")
    if isinstance(f, Sum):
        out = [0]
        for t in f.terms:
            out = _poly_add(out, qpoly_coeffs(t, ctx))
        return out
    if isinstance(f, Product):
        out = [1]
        for t in f.factors:
            out = _poly_mul(out, qpoly_coeffs(t, ctx))
        return out
    if isinstance(f, Scale):
        return [f.coeff * c for c in qpoly_coeffs(f.child, ctx)]
    raise TypeError(f"not a CFunction node: {f!r}")


def qpoly_to_tree(coeffs) -> CFunction:
    """sum c_i [x]^i as a tree (zero coefficients dropped)."""
    terms = []
    for i, c in enumerate(coeffs):
        if not isinstance(c, PadicScalar) and c == 0:
            continue
        if isinstance(c, PadicScalar) and c.is_exact_zero:
            continue
        if i == 0:
            terms.append(Const(c))
        elif not isinstance(c, PadicScalar) and c == 1:
            terms.append(_make_product([QBracket()] * i))
        else:
            terms.append(_make_product([Const(c)] + [QBracket()] * i))
    if not terms:
        return Const(0)
    return _make_sum(terms)


def _poly_derivative(coeffs):
    return [i * c for i, c in enumerate(coeffs)][1:] or [0]


def formal_qderiv(f: CFunction, order: int = 1, ctx: QContext | None = None) -> CFunction:
    """(d/d[x]_q)^order f for f in the q-polynomial subclass."""
    if order < 1:
        raise ValueError("order must be positive")
    coeffs = qpoly_coeffs(f, ctx)
    for _ in range(order):
        coeffs = _poly_derivative(coeffs)
    return qpoly_to_tree(coeffs)


def qpoly_eval_derivatives(ctx: QContext, f: CFunction, x, count: int) -> list:
    """[P(x), P'(x), ..., P^(count-1)(x)] with derivatives in [x]_q."""
    coeffs = qpoly_coeffs(f, ctx)
    y = qint(ctx, x)
    out = []
    for _ in range(count):
        acc = ctx.scalar(0)
        for c in reversed(coeffs):
            acc = acc * y + _const_scalar(ctx, c)
        out.append(acc)
        coeffs = _poly_derivative(coeffs)
    return out


# ---------------------------------------------------------------------------
# exponential-polynomial form: f(x) = sum_k c_k q^(kx), exact rational c_k


def _ep_add(a, b):
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, 0) + c
    return {k: c for k, c in out.items() if c != 0}


def _ep_mul(a, b):
    out = {}
    for i, x in a.items():
        for j, y in b.items():
            out[i + j] = out.get(i + j, 0) + x * y
    return {k: c for k, c in out.items() if c != 0}


def _exact(value):
    if isinstance(value, PadicScalar):
        raise NotExactError("closed form needs rational constants")
    if not isinstance(value, (int, Rational)):
        raise TypeError(f"bad constant {value!r}")
    return Fraction(value)


def exp_poly(f: CFunction, q: Fraction) -> dict:
    """{k: c_k} with f(x) = sum_k c_k q^(kx) exactly (q != 1, rational constants)."""
    q = Fraction(q)
    if q == 1:
        raise NotExactError("no exponential form at q = 1")
    if isinstance(f, Const):
        c = _exact(f.value)
        return {0: c} if c else {}
    if isinstance(f, QBracket):
        return {0: 1 / (1 - q), 1: -1 / (1 - q)}
    if isinstance(f, QPower):
        return {f.c: Fraction(1)}
    if isinstance(f, QBinom):
        out = {0: Fraction(1)}
        for j in range(f.n):
            out = _ep_mul(out, {0: 1 / (1 - q), 1: -(q ** (-j)) / (1 - q)})
        den = qfactorial_exact(q, f.n)
        return {k: c / den for k, c in out.items()}
    if isinstance(f, Sum):
        out = {}
        for t in f.terms:
            out = _ep_add(out, exp_poly(t, q))
        return out
    if isinstance(f, Product):
        out = {0: Fraction(1)}
        for t in f.factors:
            out = _ep_mul(out, exp_poly(t, q))
        return out
    if isinstance(f, Scale):
        c = _exact(f.coeff)
        return {k: c * v for k, v in exp_poly(f.child, q).items() if c}
    raise TypeError(f"not a CFunction node: {f!r}")


# ---------------------------------------------------------------------------
# vectorised evaluation at consecutive integers, modulo p^K


def _children(f):
    if isinstance(f, Sum):
        return f.terms
    if isinstance(f, Product):
        return f.factors
    if isinstance(f, Scale):
        return (f.child,)
    return ()


def _binom_loss(f, ctx):
    """Largest v_p([n]_q!) over QBinom nodes: the digits their division costs."""
    if isinstance(f, QBinom):
        return valuation_of_rational(qfactorial_exact(ctx.q_value, f.n), ctx.p)
    return max((_binom_loss(c, ctx) for c in _children(f)), default=0)


def _const_precision(f):
    """Smallest absolute precision among PadicScalar constants (inf if none)."""
    vals = []
    if isinstance(f, Const) and isinstance(f.value, PadicScalar):
        vals.append(f.value.abs_precision)
    if isinstance(f, Scale) and isinstance(f.coeff, PadicScalar):
        vals.append(f.coeff.abs_precision)
    vals.extend(_const_precision(c) for c in _children(f))
    return min(vals, default=math.inf)


def evaluate_integers(
    ctx: QContext, f: CFunction, start: int, count: int, precision: int, step: int = 1
):
    """Values of f at start, start+step, ..., start+(count-1)*step as ints mod p^K.

    Returns ``(values, K)`` where K <= precision is the precision the values
    are valid to (limited by finite-precision constants).  q^x and [x]_q are
    advanced by one multiplication/addition per step.
    """
    p = ctx.p
    k_valid = min(precision, _const_precision(f))
    if k_valid < 1:
        raise NotIntegralError("constants carry no precision")
    k_valid = int(k_valid)
    work = k_valid + _binom_loss(f, ctx)
    mod = p**work
    cache = {}

    def q_powers(c):
        key = ("pow", c)
        if key not in cache:
            base = pow(ctx.q_mod(mod), c, mod)
            r = pow(base, step, mod)
            v = pow(base, start, mod)
            out = [0] * count
            for i in range(count):
                out[i] = v
                v = v * r % mod
            cache[key] = out
        return cache[key]

    def brackets():
        if "br" not in cache:
            if ctx.q_is_one:
                cache["br"] = [(start + i * step) % mod for i in range(count)]
            else:
                # [x + s] = [x] + q^x [s]
                v = qint_mod(ctx, start, work)
                bs = qint_mod(ctx, step, work)
                qp = q_powers(1)
                out = [0] * count
                for i in range(count):
                    out[i] = v
                    v = (v + qp[i] * bs) % mod
                cache["br"] = out
        return cache["br"]

    def const(value):
        if isinstance(value, PadicScalar):
            if not value.is_integral():
                raise NotIntegralError("non-integral constant")
            value = value.lift()
        value = Fraction(value)
        if valuation_of_rational(value, p) < 0:
            raise NotIntegralError("non-integral constant")
        return value.numerator * pow(value.denominator, -1, mod) % mod

    def combine(a, b, op):
        if isinstance(a, int) and isinstance(b, int):
            return op(a, b) % mod
        if isinstance(a, int):
            return [op(a, y) % mod for y in b]
        if isinstance(b, int):
            return [op(x, b) % mod for x in a]
        return [op(x, y) % mod for x, y in zip(a, b)]

    def walk(node):
        if isinstance(node, Const):
            return const(node.value)
        if isinstance(node, QBracket):
            return brackets()
        if isinstance(node, QPower):
            return q_powers(node.c)
        if isinstance(node, QBinom):
            return binom(node.n)
        if isinstance(node, Sum):
            acc = walk(node.terms[0])
            for t in node.terms[1:]:
                acc = combine(acc, walk(t), int.__add__)
            return acc
        if isinstance(node, Product):
            acc = walk(node.factors[0])
            for t in node.factors[1:]:
                acc = combine(acc, walk(t), int.__mul__)
            return acc
        if isinstance(node, Scale):
            return combine(const(node.coeff), walk(node.child), int.__mul__)
        raise TypeError(f"not a CFunction node: {node!r}")

    def binom(n):
        if n == 0:
            return 1
        br = brackets()
        num = list(br)
        for j in range(1, n):
            # [x-j] = ([x] - [j]) q^(-j)
            bj = qint_mod(ctx, j, work)
            qinv = pow(ctx.q_mod(mod), -j, mod)
            num = [a * ((b - bj) * qinv % mod) % mod for a, b in zip(num, br)]
        den = qfactorial_exact(ctx.q_value, n)
        v = valuation_of_rational(den, p)
        unit = den / Fraction(p) ** v
        inv = unit.denominator * pow(unit.numerator, -1, mod) % mod
        shift = p**v
        return [(a // shift) * inv % mod for a in num]

    out = walk(f)
    final = p**k_valid
    if isinstance(out, int):
        return [out % final] * count, k_valid
    return [v % final for v in out], k_valid


# ---------------------------------------------------------------------------
# C^1 norm estimate


def c1_norm_estimate(ctx: QContext, f: CFunction, depth: int):
    """Sampled lower bounds (||f||_inf, ||Delta_1 f||_inf).

    x runs over all residues mod p^depth and m over u*p^j with
    1 <= u < p, 0 <= j < depth.  This is a sampling estimate, not a
    certified supremum.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    p = ctx.p
    n = p**depth
    steps = [(u * p**j, j) for j in range(depth) for u in range(1, p)]
    try:
        values, k = evaluate_integers(ctx, f, 0, 2 * n, ctx.precision)
        sup_v = min((_vp(v, p, k) for v in values[:n]), default=math.inf)
        delta_v = math.inf
        for x in range(n):
            fx = values[x]
            for m, j in steps:
                delta_v = min(delta_v, _vp(values[x + m] - fx, p, k) - j)
        return _norm_of(p, sup_v), _norm_of(p, delta_v)
    except NotIntegralError:
        pass
    vals = [eval_function(ctx, f, x) for x in range(2 * n)]
    sup = max((v.norm for v in vals[:n]), default=Fraction(0))
    dnorm = Fraction(0)
    for x in range(n):
        for m, j in steps:
            d = (vals[x + m] - vals[x]).norm * Fraction(p) ** j
            dnorm = max(dnorm, d)
    return sup, dnorm


def _vp(v, p, k):
    v %= p**k
    if v == 0:
        return math.inf
    out = 0
    while v % p == 0:
        v //= p
        out += 1
    return out


def _norm_of(p, v):
    if v == math.inf:
        return Fraction(0)
    return Fraction(p) ** (-v)
