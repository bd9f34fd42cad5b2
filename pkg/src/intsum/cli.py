"""Command-line front end: ``intsum <command> [options]``.

Every run prints one JSON object ``{"config", "result", "diagnostics"}``
(or a CSV table with ``--format csv``). Exit status is 0 on success, 2 on a
usage error and 1 when the computation itself fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .altsum import DEFAULT_FORM, FORMS, build_plan, default_threads, em_sum_1d, evaluate_alt, exact_sum
from .bounds import InvalidFlagError, bound_coarse, bound_tight, kappa, lambda_star
from .boxcalc import DEFAULT_QUAD, CapabilityError, FieldSpec, QuadratureConfig
from .coefficients import InvalidOrderError, format_rational, gamma_table
from .conedecomp import HalfOpenCone, unimodular_refine
from .exprdsl import ParseError, is_polynomial, parse, to_callable, to_source
from .polytope import LatticePolytope, count_lattice_points, exact_polytope_sum, polytope_alt_sum, vertex_cones
from .series import OrderError, generalized_sum


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Resolved options of one run. ``threads`` is kept out of the echoed
    config so that output does not depend on the degree of parallelism."""

    command: str
    options: dict[str, Any] = field(default_factory=dict)
    fmt: str = "json"
    threads: int = 1
    seed: int = 0

    def echo(self) -> dict:
        return {"command": self.command, **self.options, "format": self.fmt, "seed": self.seed, "version": __version__}


# output


def _plain(obj):
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """JSON with floats at 17 significant digits and rationals as "num/den"."""
    obj = _plain(obj)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return "%.17g" % obj if math.isfinite(obj) else "null"
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {dumps(v)}" for k, v in obj.items()) + "}"
    return "[" + ", ".join(dumps(v) for v in obj) + "]"


def _cell(v) -> str:
    v = _plain(v)
    if isinstance(v, float):
        return "%.17g" % v
    if v is None:
        return ""
    if isinstance(v, list):
        return " ".join(_cell(x) for x in v)
    return str(v)


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


@dataclass
class Output:
    result: dict
    diagnostics: dict = field(default_factory=dict)
    table: Optional[tuple[list[str], list[list]]] = None

    def render(self, cfg: RunConfig) -> str:
        if cfg.fmt == "csv":
            header, rows = self.table or (list(self.result), [list(self.result.values())])
            return _csv(header, rows)
        return dumps({"config": cfg.echo(), "result": self.result, "diagnostics": self.diagnostics}) + "\n"


# argument helpers


def int_vector(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None
    return vals


def int_matrix(text: str) -> list[tuple[int, ...]]:
    rows = [int_vector(r) for r in text.split(";")]
    if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
        raise UsageError(f"matrix must be square, got {text!r}")
    return rows


def number(text: str):
    try:
        return Fraction(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def expression(src: str, p: int):
    try:
        return parse(src, p)
    except ParseError as exc:
        raise UsageError(f"in {src!r}: {exc}") from None


def field_spec(p: int, f_src: str, F_src: Optional[str], derivs: Sequence[str] = ()) -> tuple[FieldSpec, bool]:
    """FieldSpec from DSL text and whether the exact rational route applies."""
    fe = expression(f_src, p)
    Fe = expression(F_src, p) if F_src else None
    dfs = [to_callable(expression(d, p)) for d in derivs]

    derivative = None
    if dfs:

        def derivative(alpha):
            k = alpha[0]
            if p != 1 or k > len(dfs):
                raise CapabilityError(f"no derivative of order {k} supplied (use --deriv)")
            return dfs[k - 1]

    spec = FieldSpec(p, to_callable(fe), to_callable(Fe) if Fe else None, derivative, name=to_source(fe))
    exact = Fe is not None and is_polynomial(fe) and is_polynomial(Fe)
    return spec, exact


# commands


def cmd_coeffs(args, cfg: RunConfig) -> Output:
    table = gamma_table(args.m)
    cfg.options = {"m": args.m}
    rows = [[j, g, t] for j, (g, t) in enumerate(zip(table.gamma, table.tau), start=1)]
    result = {"m": args.m, "rows": [{"j": j, "gamma": g, "tau": t} for j, g, t in rows]}
    return Output(result, table=(["j", "gamma", "tau"], rows))


def cmd_sum(args, cfg: RunConfig) -> Output:
    n = int_vector(args.n)
    p = len(n)
    f, exact = field_spec(p, args.f, args.F, args.deriv)
    exact = exact and not args.force_quad
    quad = QuadratureConfig(refinement_tolerance=args.tol)
    cfg.options = {
        "m": args.m, "p": p, "n": list(n), "f": args.f, "F": args.F, "form": args.form,
        "force_quad": args.force_quad, "quadrature": asdict(quad),
    }
    res = evaluate_alt(
        f, args.m, n, args.form, quad, exact=exact, force_quad=args.force_quad,
        with_exact_sum=not args.no_exact, threads=cfg.threads,
    )
    result = {"approximation": res.approximation, "exact_sum": res.exact_sum, "residual": res.residual}
    route = "quadrature" if (args.force_quad or f.F is None) else ("ftc-rational" if exact else "ftc")
    diag: dict = {"route": route, "plan_terms": len(build_plan(args.m, n, args.form))}
    if args.compare_em:
        if p != 1:
            raise UsageError("--compare-em needs a one-dimensional sum")
        em = em_sum_1d(f, args.m, n[0])
        diag["em_approximation"] = em
        if res.exact_sum is not None:
            diag["em_residual"] = float(res.exact_sum) - em
    if args.verbose:
        plan = build_plan(args.m, n, args.form)
        diag["plan"] = [{"weight": t.weight, "lower": list(t.box.lower), "upper": list(t.box.upper)} for t in plan.terms]
    return Output(result, diag)


def cmd_series(args, cfg: RunConfig) -> Output:
    c = int_vector(args.shift)
    p = len(c)
    f, exact = field_spec(p, args.f, args.F)
    M2m = number(args.M2m) if args.M2m is not None else None
    cfg.options = {"m": args.m, "m0": args.m0, "p": p, "shift": list(c), "f": args.f, "F": args.F,
                   "M2m": args.M2m, "scan_shifts": args.scan_shifts}
    res = generalized_sum(f, args.m, args.m0, c, M2m=M2m, exact=exact)
    result = {"value": res.value, "shift": list(res.shift), "partial_sum": res.partial_sum,
              "correction": res.correction, "order": res.order, "remainder_bound": res.remainder_bound}
    diag: dict = {"route": "rational" if exact else "float"}
    if args.scan_shifts:
        try:
            a, b = (int(x) for x in args.scan_shifts.split(":"))
        except ValueError:
            raise UsageError("--scan-shifts expects a:b") from None
        scan = []
        for t in range(a, b + 1):
            r = generalized_sum(f, args.m, args.m0, (t,) * p, M2m=M2m, exact=exact)
            scan.append({"shift": t, "value": r.value, "remainder_bound": r.remainder_bound})
        diag["scan"] = scan
        return Output(result, diag, (["shift", "value", "remainder_bound"], [list(s.values()) for s in scan]))
    return Output(result, diag)


def cmd_bound(args, cfg: RunConfig) -> Output:
    M = number(args.M2m)
    cfg.options = {"m": args.m, "p": args.p, "M2m": args.M2m, "tight": args.tight, "strict_factor": args.strict_factor}
    result: dict = {"coarse": bound_coarse(args.m, args.p, M, args.strict_factor)}
    if args.tight:
        result["tight"] = bound_tight(gamma_table(args.m), args.p, M)
    t_star, lam = lambda_star()
    return Output(result, {"lambda_star": lam, "t_star": t_star, "kappa": kappa()})


def cmd_decompose(args, cfg: RunConfig) -> Output:
    rows = int_matrix(args.matrix)
    p = len(rows)
    flags = int_vector(args.strict) if args.strict else (0,) * p
    apex = int_vector(args.apex) if args.apex else (0,) * p
    if len(flags) != p or any(x not in (0, 1) for x in flags) or len(apex) != p:
        raise UsageError("--strict takes one 0/1 flag per coordinate and --apex one integer per coordinate")
    cfg.options = {"matrix": [list(r) for r in rows], "strict": list(flags), "apex": list(apex)}
    gens = tuple(zip(*rows))
    try:
        cone = HalfOpenCone(apex, gens, frozenset(i for i, s in enumerate(flags) if s))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    children = unimodular_refine(cone)
    result = {"det": cone.determinant, "children": [c.to_dict() for c in children]}
    table = [[i, c.determinant, [x for g in c.generators for x in g], sorted(c.strict), c.sign] for i, c in enumerate(children)]
    return Output(result, {"child_count": len(children)}, (["child", "det", "generators", "strict", "sign"], table))


def _support(text: str, p: int):
    parts = text.split(";")
    try:
        pairs = [tuple(float(x) for x in part.split(",")) for part in parts]
    except ValueError:
        raise UsageError(f"bad --support {text!r}") from None
    if len(pairs) != p or any(len(pr) != 2 or pr[0] > pr[1] for pr in pairs):
        raise UsageError("--support takes lo,hi per coordinate separated by ';'")
    return tuple(pr[0] for pr in pairs), tuple(pr[1] for pr in pairs)


def cmd_polytope(args, cfg: RunConfig) -> Output:
    try:
        P = LatticePolytope.from_json(args.file)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read polytope {args.file!r}: {exc}") from None
    xi = int_vector(args.xi) if args.xi else None
    cfg.options = {"file": args.file, "polytope": P.to_dict(), "count": args.count, "f": args.f,
                   "support": args.support, "m": args.m, "xi": args.xi, "M2m": args.M2m}
    dec = vertex_cones(P, xi, seed=cfg.seed)
    diag = {"xi": list(dec.xi), "vertex_cones": len(dec.vertex_cones), "unimodular_cones": len(dec.cones)}
    if args.count:
        return Output({"count": count_lattice_points(P, dec)}, diag)
    if not (args.f and args.support and args.m):
        raise UsageError("polytope needs --count or all of --f, --support, --m")
    f, _ = field_spec(P.p, args.f, None)
    support = _support(args.support, P.p)
    approx = polytope_alt_sum(P, f, args.m, support, decomposition=dec, threads=cfg.threads)
    exact = exact_polytope_sum(P, f)
    result = {"approximation": approx, "exact_sum": exact, "residual": exact - approx}
    if args.M2m is not None:
        result["coarse_bound"] = bound_coarse(args.m, P.p, number(args.M2m))
    return Output(result, diag)


# bench


@dataclass(frozen=True)
class Family:
    name: str
    f: Callable
    F: Callable
    deriv: Callable[[int], Callable]
    exact: Callable[[int], float]


def _inv_sq_deriv(k):
    return lambda x: (-1) ** k * math.factorial(k + 1) / (x + 4.0) ** (k + 2)


FAMILIES = {
    "poly": Family(
        "poly", lambda x: x**3, lambda x: x**4 / 4,
        lambda k: (lambda x: math.perm(3, k) * x ** (3 - k)) if k <= 3 else (lambda x: 0.0 * x),
        lambda n: float(sum(Fraction(k) ** 3 for k in range(n))),
    ),
    "exp_neg": Family(
        "exp_neg", lambda x: np.exp(-x), lambda x: -np.exp(-x),
        lambda k: lambda x: (-1) ** k * np.exp(-x),
        lambda n: -math.expm1(-n) / -math.expm1(-1.0),
    ),
    "inv_sq": Family(
        # pole kept at -4, left of every integration box for m <= 7
        "inv_sq", lambda x: 1.0 / (x + 4.0) ** 2, lambda x: -1.0 / (x + 4.0),
        _inv_sq_deriv,
        lambda n: math.fsum(1.0 / (k + 4.0) ** 2 for k in range(n)),
    ),
}
BENCH_HEADER = ["function", "m", "n", "alt_error", "em_error", "alt_time", "em_time"]


def _median_time(fn, repeats: int) -> tuple[float, float]:
    times = []
    val = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        val = fn()
        times.append(time.perf_counter() - t0)
    return val, statistics.median(times)


def bench(families: Sequence[str], m_values: Sequence[int], n_values: Sequence[int], repeats: int = 5) -> list[list]:
    """Measured absolute errors and median wall-clock times, Alt vs Euler-Maclaurin (p = 1)."""
    rows = []
    for name in families:
        fam = FAMILIES[name]
        spec = FieldSpec(1, fam.f, fam.F, lambda alpha, fam=fam: fam.deriv(alpha[0]), name=name)
        for m in m_values:
            for n in n_values:
                truth = fam.exact(n)
                alt, alt_t = _median_time(lambda: evaluate_alt(spec, m, (n,)).approximation, repeats)
                em, em_t = _median_time(lambda: em_sum_1d(spec, m, n), repeats)
                rows.append([name, m, n, abs(alt - truth), abs(em - truth), alt_t, em_t])
    return rows


def _range(text: str) -> list[int]:
    if ":" in text:
        a, b = (int(x) for x in text.split(":"))
        return list(range(a, b + 1))
    return list(int_vector(text))


def cmd_bench(args, cfg: RunConfig) -> Output:
    fams = [s for s in args.families.split(",") if s]
    unknown = [s for s in fams if s not in FAMILIES]
    if unknown:
        raise UsageError(f"unknown families {unknown}; choose from {sorted(FAMILIES)}")
    try:
        ms, ns = _range(args.m_range), _range(args.n_values)
    except ValueError:
        raise UsageError("bad --m-range or --n-values") from None
    cfg.options = {"families": fams, "m": ms, "n": ns, "repeats": args.repeats}
    rows = bench(fams, ms, ns, args.repeats)
    return Output({"rows": [dict(zip(BENCH_HEADER, r)) for r in rows]}, {"timing": "median wall clock seconds"},
                  (BENCH_HEADER, rows))


# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: ALTSUM_THREADS or all cores)")
    common.add_argument("--seed", type=int, default=0)

    ap = argparse.ArgumentParser(prog="intsum", description="Integral-only summation toolkit.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("coeffs", parents=[common], help="gamma and tau coefficients")
    s.add_argument("--m", type=int, required=True)

    s = sub.add_parser("sum", parents=[common], help="approximate a finite box sum by integrals")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", required=True, help="n1,...,np")
    s.add_argument("--f", required=True)
    s.add_argument("--F", default=None, help="antiderivative with mixed partial f")
    s.add_argument("--form", choices=FORMS, default=DEFAULT_FORM)
    s.add_argument("--force-quad", action="store_true")
    s.add_argument("--compare-em", action="store_true")
    s.add_argument("--deriv", action="append", default=[], help="k-th derivative of f, repeat in order k=1,2,...")
    s.add_argument("--tol", type=float, default=DEFAULT_QUAD.refinement_tolerance)
    s.add_argument("--no-exact", action="store_true", help="skip the brute-force sum")
    s.add_argument("--verbose", action="store_true")

    s = sub.add_parser("series", parents=[common], help="generalized sum of an infinite series")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--m0", type=int, default=None)
    s.add_argument("--f", required=True)
    s.add_argument("--F", required=True)
    s.add_argument("--shift", required=True, help="c1,...,cp")
    s.add_argument("--M2m", default=None)
    s.add_argument("--scan-shifts", default=None, help="a:b, diagonal shifts t*1 for t in a..b")

    s = sub.add_parser("bound", parents=[common], help="remainder bounds")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--M2m", required=True)
    s.add_argument("--tight", action="store_true")
    s.add_argument("--strict-factor", action="store_true", help="use the smaller constant valid for m >= 2")

    s = sub.add_parser("decompose", parents=[common], help="unimodular refinement of a half-open cone")
    s.add_argument("--matrix", required=True, help='rows, e.g. "1,1;0,2"; generators are the columns')
    s.add_argument("--strict", default=None, help="0/1 flag per coordinate, 1 = strict")
    s.add_argument("--apex", default=None)

    s = sub.add_parser("polytope", parents=[common], help="lattice points and sums over a simple polytope")
    s.add_argument("--file", required=True)
    s.add_argument("--count", action="store_true")
    s.add_argument("--f", default=None)
    s.add_argument("--support", default=None, help="lo1,hi1;lo2,hi2;...")
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--xi", default=None, help="generic direction")
    s.add_argument("--M2m", default=None)

    s = sub.add_parser("bench", parents=[common], help="Alt vs Euler-Maclaurin timings (p = 1)")
    s.add_argument("--families", default="poly,exp_neg,inv_sq")
    s.add_argument("--m-range", default="1:4")
    s.add_argument("--n-values", default="100")
    s.add_argument("--repeats", type=int, default=5)
    return ap


COMMANDS = {
    "coeffs": cmd_coeffs, "sum": cmd_sum, "series": cmd_series, "bound": cmd_bound,
    "decompose": cmd_decompose, "polytope": cmd_polytope, "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        print("intsum: --threads must be positive", file=sys.stderr)
        return 2
    cfg = RunConfig(args.command, fmt=args.format, threads=threads, seed=args.seed)
    try:
        out = COMMANDS[args.command](args, cfg)
    except (UsageError, InvalidOrderError, OrderError, InvalidFlagError) as exc:
        print(f"intsum {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, RuntimeError, TypeError) as exc:
        print(f"intsum {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(out.render(cfg))
    return 0


if __name__ == "__main__":
    sys.exit(main())
