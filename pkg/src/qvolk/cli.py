"""Command-line front end.  Each subcommand adapts one library call."""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from . import dist, mahler, theorems, volkenborn
from .errors import BudgetError, DecompositionError, PrecisionError, QVolkError
from .funcexpr import eval_function, parse_function, to_text
from .padic import PadicScalar
from .qcalc import QContext
from .summation import DEFAULT_BUDGET

SCHEMA = 1
EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_EXHAUSTED = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _levels(text):
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None
    if not 1 <= lo < hi:
        raise argparse.ArgumentTypeError("need 1 <= LO < HI")
    return lo, hi


def _common():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--p", type=int, default=5, help="prime (default 5)")
    g.add_argument("--q", default=None, help="integer or rational q with |q-1| < 1 (default 1+p)")
    g.add_argument("--prec", type=int, default=20, help="absolute precision in p-adic digits")
    g.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max summation terms")
    g.add_argument("--format", choices=("text", "json"), default="text")
    g.add_argument("--seed", type=int, default=0, help="seed for sampled spot checks")
    return common


def _source_args(parser, default_kind="function"):
    parser.add_argument("--kind", choices=("base", "function", "json"), default=default_kind)
    parser.add_argument("--f", default="[x]^2", help="function text for --kind function")
    parser.add_argument("--input", help="distribution JSON for --kind json")
    parser.add_argument("--depth", type=int, default=4)
    parser.add_argument("--inner", type=int, default=6, help="inner level M")


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="qvolk", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bernoulli", parents=[common], help="q-Bernoulli numbers two ways")
    p.add_argument("--m", type=int, default=4, help="largest index")
    p.add_argument("--N", type=int, default=None, help="Riemann-sum level (default: budget-sized)")

    p = sub.add_parser("integrate", parents=[common], help="q-Volkenborn partial sums")
    p.add_argument("--f", required=True)
    p.add_argument("--levels", type=_levels, default=(2, 6), help="LO..HI")

    p = sub.add_parser("check-distribution", parents=[common], help="additivity and invariance")
    _source_args(p)
    p.add_argument("--export", help="write the table as JSON to this path")

    p = sub.add_parser("radon-nikodym", parents=[common], help="approximants of f_mu(x)")
    _source_args(p)
    p.add_argument("--x", type=int, default=1)

    p = sub.add_parser("verify", parents=[common], help="numerical identity checks")
    vsub = p.add_subparsers(dest="identity", required=True)
    v = vsub.add_parser("eq13", parents=[common], help="congruence expansion")
    v.add_argument("--P", default="[x]^2")
    v.add_argument("--a", type=int, default=1)
    v.add_argument("--n", type=int, default=2)
    v.add_argument("--terms", type=int, default=2)
    v.add_argument("--M", type=int, default=6)
    v = vsub.add_parser("eq16", parents=[common], help="density identity")
    v.add_argument("--P", default="[x]^2")
    v.add_argument("--g", default="[x]")
    v.add_argument("--N", type=int, default=4)
    v.add_argument("--M", type=int, default=4)
    v = vsub.add_parser("eq17", parents=[common], help="density recovery")
    v.add_argument("--f", default="q^(2*x) + 3*[x]")
    v.add_argument("--a", type=int, default=2)
    v.add_argument("--n-max", type=int, default=5)
    v.add_argument("--M", type=int, default=6)

    p = sub.add_parser("decompose", parents=[common], help="mu = mu_1 + mu_2")
    _source_args(p, "base")
    p.add_argument("--degree", type=int, default=4)

    p = sub.add_parser("mahler", parents=[common], help="q-Mahler coefficients")
    p.add_argument("--f", required=True)
    p.add_argument("--M", type=int, default=12, help="horizon")
    p.add_argument("--m", type=int, default=None, help="truncation order for the tail bound")
    return parser


def _context(args):
    p = args.p
    try:
        q = Fraction(args.q) if args.q is not None else Fraction(p + 1)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot read q from {args.q!r}") from None
    if args.prec < 4:
        raise UsageError("--prec must be >= 4")
    if args.budget < p * p:
        raise UsageError("--budget must be >= p^2")
    try:
        return QContext(p, q, args.prec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# report helpers


def _scalar(x: PadicScalar, fmt):
    return x.to_json() if fmt == "json" else x.to_text()


def _norm(x):
    return str(x)


class Report:
    def __init__(self, args, ctx):
        self.fmt = args.format
        self.config = {
            "command": args.command if args.command != "verify" else f"verify {args.identity}",
            "p": ctx.p,
            "q": str(ctx.q_value),
            "prec": ctx.precision,
            "budget": args.budget,
            "seed": args.seed,
        }
        self.results = []
        self.checks = []

    def row(self, **fields):
        self.results.append(fields)

    def check(self, name, ok, norm, bound=None):
        entry = {"name": name, "ok": bool(ok), "norm": _norm(norm)}
        if bound is not None:
            entry["bound"] = _norm(bound)
        self.checks.append(entry)

    @property
    def ok(self):
        return all(c["ok"] for c in self.checks)

    def emit(self, out):
        if self.fmt == "json":
            doc = {"schema": SCHEMA, "config": self.config, "results": self.results,
                   "checks": self.checks}
            out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            return
        out.write(" ".join(f"{k}={v}" for k, v in self.config.items()) + "\n")
        for r in self.results:
            out.write("  ".join(f"{k}: {_text(v)}" for k, v in r.items()) + "\n")
        for c in self.checks:
            status = "ok" if c["ok"] else "FAIL"
            extra = f" (bound {c['bound']})" if "bound" in c else ""
            out.write(f"check {c['name']}: {status} norm={c['norm']}{extra}\n")


def _text(v):
    if isinstance(v, list):
        return "[" + ", ".join(_text(x) for x in v) + "]"
    return str(v)


def _parse(text):
    return parse_function(text)


def _distribution(args, ctx):
    if args.kind == "base":
        return dist.base_distribution(ctx, args.depth, budget=args.budget)
    if args.kind == "json":
        if not args.input:
            raise UsageError("--kind json needs --input")
        with open(args.input, encoding="utf-8") as fh:
            d = dist.CylinderDistribution.from_json(json.load(fh), ctx.precision)
        if d.ctx.p != ctx.p or d.ctx.q_value != ctx.q_value:
            raise UsageError("table p or q differs from --p/--q")
        return d
    return dist.distribution_from_function(ctx, _parse(args.f), args.depth, args.inner,
                                           budget=args.budget)


# ---------------------------------------------------------------------------
# subcommands


def cmd_bernoulli(args, ctx, rep):
    p = ctx.p
    N = args.N
    if N is None:
        N = 1
        while p ** (N + 1) <= args.budget:
            N += 1
    closed = volkenborn.qbernoulli_table(ctx, args.m, "closed")
    integral = volkenborn.qbernoulli_table(ctx, args.m, "integral", N, budget=args.budget)
    bound = Fraction(1, p ** (N // 2))
    for m, (c, s) in enumerate(zip(closed.beta, integral.beta)):
        defect = (c - s).norm
        rep.row(m=m, closed=_scalar(c, rep.fmt), integral=_scalar(s, rep.fmt), N=N,
                defect=_norm(defect))
        rep.check(f"beta_{m}_closed_vs_integral", defect <= bound, defect, bound)


def cmd_integrate(args, ctx, rep):
    lo, hi = args.levels
    res = volkenborn.integrate(ctx, _parse(args.f), lo, hi, budget=args.budget)
    for N, s in zip(res.levels_used, res.partial_sums):
        rep.row(N=N, sum=_scalar(s, rep.fmt))
    rep.row(value=_scalar(res.value, rep.fmt), defects=[_norm(d) for d in res.successive_defects],
            method=res.method)
    rep.check("converged", res.converged, res.successive_defects[-1])


def cmd_check_distribution(args, ctx, rep):
    d = _distribution(args, ctx)
    p = ctx.p
    defect = dist.additivity_defect(d)
    bound = Fraction(1, p ** (d.inner_level - 2)) if d.inner_level else Fraction(0)
    report = dist.invariance_report(d)
    rep.row(provenance=d.provenance, depth=d.depth, inner_level=d.inner_level,
            additivity_defect=_norm(defect))
    for n, (dl, c) in enumerate(zip(report.deltas, report.strong_constants)):
        rep.row(n=n, delta=_norm(dl), delta_times_p_n=_norm(c))
    rep.row(classification=report.classification, c=_norm(report.c),
            admissible_c=[_norm(c) for c in report.admissible_c], admissible=report.admissible)
    if report.strong:
        rep.row(lipschitz=_norm(dist.lipschitz_estimate(d, report)))
    rep.check("additivity", defect <= bound, defect, bound)
    if args.export:
        with open(args.export, "w", encoding="utf-8") as fh:
            json.dump(d.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def cmd_radon_nikodym(args, ctx, rep):
    d = _distribution(args, ctx)
    rn = dist.rn_derivative(d, args.x)
    for n, a in enumerate(rn.approximants):
        rep.row(n=n, approximant=_scalar(a, rep.fmt))
    rep.row(x=args.x, value=_scalar(rn.value, rep.fmt), defects=[_norm(x) for x in rn.defects])
    rep.check("defects_decay", volkenborn.decays(rn.defects), rn.defects[-1] if rn.defects else 0)


def cmd_verify(args, ctx, rep):
    p = ctx.p
    if args.identity == "eq13":
        P = _parse(args.P)
        r = theorems.check_congruence12(ctx, P, args.a, args.n, args.terms, args.M,
                                        budget=args.budget)
        rep.row(lhs=_scalar(r.lhs, rep.fmt), rhs=_scalar(r.rhs, rep.fmt), terms=r.terms,
                residual=_norm(r.residual_norm), scaled_residual=_norm(r.scaled_residual),
                variant_scaled_residual=_norm(r.variant_scaled_residual))
        if args.terms == 2:
            rep.check("congruence_mod_bracket", r.scaled_residual <= r.bound, r.scaled_residual,
                      r.bound)
        else:
            bound = Fraction(1, p ** (args.M - 2))
            rep.check("series_residual", r.residual_norm <= bound, r.residual_norm, bound)
    elif args.identity == "eq16":
        r = theorems.check_density_theorem3(ctx, _parse(args.P), _parse(args.g), args.N, args.M,
                                            budget=args.budget)
        bound = Fraction(1, p ** (min(args.N, args.M) // 2))
        rep.row(lhs=_scalar(r.lhs, rep.fmt), rhs=_scalar(r.rhs, rep.fmt), method=r.method)
        rep.check("density_defect", r.defect <= bound, r.defect, bound)
    else:
        r = theorems.check_rn_recovery(ctx, _parse(args.f), args.a, args.n_max, args.M,
                                       budget=args.budget)
        rep.row(target=_scalar(r.target, rep.fmt))
        for n, (a, dn) in enumerate(zip(r.approximants, r.differences)):
            rep.row(n=n, approximant=_scalar(a, rep.fmt), difference=_norm(dn))
        rep.row(constant=_norm(r.constant))
        rep.check("recovery_decays", volkenborn.decays(r.differences), r.differences[-1])


def cmd_decompose(args, ctx, rep):
    d = _distribution(args, ctx)
    r = theorems.decompose_theorem4(ctx, d, args.inner, degree=args.degree, budget=args.budget)
    rep.row(density=to_text(r.density), fit_residual=_norm(r.fit_residual),
            bound_M=_norm(r.bound_M), level_bounds=[_norm(b) for b in r.level_bounds],
            exact_sum=r.exact_sum)
    rep.check("exact_sum", r.exact_sum, 0)
    earlier = max(r.level_bounds[:-1], default=Fraction(0))
    last = r.level_bounds[-1]
    stable = last <= ctx.p * earlier or last == 0
    rep.check("bounded_stable", stable, r.bound_M)


def cmd_mahler(args, ctx, rep):
    f = _parse(args.f)
    e = mahler.expand_mahler(ctx, f, args.M, budget=args.budget)
    for n, (a, t) in enumerate(zip(e.coeffs, e.tail_norms)):
        rep.row(n=n, a_n=_scalar(a, rep.fmt), n_abs_a_n=_norm(t))
    if args.m is not None:
        f_m, bound = mahler.truncate_tail(e, args.m)
        rep.row(m=args.m, f_m=to_text(f_m), tail_bound=_norm(bound), horizon_limited=True)
    worst = max((e.evaluate(x) - eval_function(ctx, f, x)).norm for x in range(args.M + 1))
    rep.check("reconstruction", worst == 0, worst)
    rng = random.Random(args.seed)
    spots = sorted(rng.sample(range(args.M + 1, 4 * args.M + 4), 3))
    spread = max((e.evaluate(x) - eval_function(ctx, f, x)).norm for x in spots)
    rep.row(spot_points=spots, spot_difference=_norm(spread))
    tail = e.tail_norms[args.M // 2:]
    rep.check("tail_nonincreasing", all(b <= a for a, b in zip(tail, tail[1:])), tail[-1])


COMMANDS = {
    "bernoulli": cmd_bernoulli,
    "integrate": cmd_integrate,
    "check-distribution": cmd_check_distribution,
    "radon-nikodym": cmd_radon_nikodym,
    "verify": cmd_verify,
    "decompose": cmd_decompose,
    "mahler": cmd_mahler,
}


def run_command(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        ctx = _context(args)
        rep = Report(args, ctx)
        COMMANDS[args.command](args, ctx, rep)
    except UsageError as exc:
        print(f"qvolk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetError, PrecisionError) as exc:
        print(f"qvolk: exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except DecompositionError as exc:
        print(f"qvolk: check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (QVolkError, ValueError, OSError) as exc:
        print(f"qvolk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rep.emit(out)
    return EXIT_OK if rep.ok else EXIT_CHECK


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
