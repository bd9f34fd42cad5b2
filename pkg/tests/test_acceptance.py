"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line with its measured runtime; the
lines are printed in the pytest terminal summary (see ``conftest.py``) and
when the module is run as a script.
"""

from __future__ import annotations

import contextlib
import itertools
import json
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import brentq

from helpers import brute_sum, random_polynomial
from intsum.altsum import evaluate_alt, exact_sum, remainder_direct
from intsum.bounds import bound_coarse, bound_tight, kappa, lambda_star
from intsum.boxcalc import DEFAULT_QUAD, FieldSpec
from intsum.cli import main as cli_main
from intsum.coefficients import binomial, gamma_table, tau_of
from intsum.conedecomp import HalfOpenCone, cone_contains, det, indicator_sum, unimodular_refine
from intsum.polytope import (
    LatticePolytope,
    count_lattice_points,
    exact_polytope_sum,
    lattice_points,
    polytope_alt_sum,
    vertex_cones,
)
from intsum.series import generalized_sum

RESULTS: list[str] = []


@contextlib.contextmanager
def criterion(number: int, title: str, limit: float):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        RESULTS.append(f"FAIL  {number:>2}. {title} ({elapsed:.2f}s): {exc}")
        raise
    RESULTS.append(f"PASS  {number:>2}. {title} ({elapsed:.2f}s)")


def test_01_coefficient_identities():
    with criterion(1, "coefficient identities", 1.0):
        for m in range(1, 11):
            t = gamma_table(m)
            for a in range(m):
                s = sum(g * j ** (2 * a + 1) for j, g in enumerate(t.gamma, 1))
                assert s == (1 if a == 0 else 0)
            assert t.tau[0] + 2 * sum(t.tau[1:]) == 1
            for p in (2, 3):
                rng = range(1 - m, m)
                total = sum(tau_of(t, [1 + abs(b) for b in beta]) for beta in itertools.product(rng, repeat=p))
                assert total == 1
            assert sum(abs(g) * j for j, g in enumerate(t.gamma, 1)) == Fraction(2 ** (2 * m), binomial(2 * m, m)) - 1


def test_02_constants():
    with criterion(2, "lambda_star and kappa", 0.1):
        _, lam = lambda_star()
        assert abs(lam - 0.3081) <= 5e-5
        assert abs(kappa() - 0.27754) <= 5e-6


def test_03_polynomial_exactness():
    with criterion(3, "polynomial exactness", 10.0):
        rng = random.Random(2024)
        for _ in range(50):
            p, m = rng.randint(1, 3), rng.randint(1, 3)
            poly = random_polynomial(rng, p, 2 * m - 1)
            n = tuple(rng.randint(1, 6) for _ in range(p))
            f = poly.field()
            got = evaluate_alt(f, m, n, exact=True).approximation
            assert got == exact_sum(f, n, exact=True) == brute_sum(poly, n)


def test_04_remainder_identity():
    exp1 = FieldSpec(1, np.exp, np.exp, lambda a: np.exp)
    exp2 = FieldSpec(2, lambda x, y: np.exp(x + y), lambda x, y: np.exp(x + y), lambda a: (lambda x, y: np.exp(x + y)))
    with criterion(4, "remainder identity", 30.0):
        for f, ns in ((exp1, [(1,), (2,), (3,)]), (exp2, [(1, 2), (2, 2), (3, 3)])):
            for m in (1, 2):
                for n in ns:
                    res = evaluate_alt(f, m, n, with_exact_sum=True)
                    assert abs((res.approximation - res.exact_sum) - remainder_direct(f, m, n)) <= 1e-7


def test_05_bounds_for_sine():
    sine = FieldSpec(1, np.sin, lambda x: -np.cos(x))
    with criterion(5, "bound validity and ordering", 5.0):
        for m in range(1, 5):
            t = gamma_table(m)
            for n in (1, 2, 5, 13, 30, 50):
                res = evaluate_alt(sine, m, (n,), with_exact_sum=True)
                tight = float(bound_tight(t, 1, n))
                assert abs(res.exact_sum - res.approximation) <= tight <= bound_coarse(m, 1, n)
        # independent evaluation: kappa from a Brent root of the log-derivative
        ts = brentq(lambda s: math.log((1 - s) / (1 + s)) + 2 / s, 0.5, 0.99, xtol=1e-15)
        lam = (1 - ts) ** (ts - 1) * (1 + ts) ** (-1 - ts) * ts * ts
        ka = math.sqrt(lam / 4)
        independent = 1.0331 * math.pi / 6 * ka**2
        assert abs(bound_coarse(1, 1, 1) - independent) <= 1e-3
        assert abs(bound_coarse(1, 1, 1) - 0.0417) <= 1e-3


def test_06_divergent_series():
    linear = FieldSpec(1, lambda x: x, lambda x: x * x / 2)
    bilinear = FieldSpec(2, lambda x, y: x * y, lambda x, y: x * x * y * y / 4)
    trilinear = FieldSpec(3, lambda x, y, z: x * y * z, lambda x, y, z: (x * y * z) ** 2 / 8)
    with criterion(6, "divergent series", 1.0):
        want = {1: Fraction(-1, 12), 2: Fraction(1, 144), 3: Fraction(-1, 1728)}
        for p, f in ((1, linear), (2, bilinear), (3, trilinear)):
            for c in (0, 5, 10):
                assert generalized_sum(f, 2, 2, (c,) * p, exact=True).value == want[p]


def test_07_geometric_series():
    r, m = 0.5, 3
    L = abs(math.log(r))
    f = FieldSpec(1, lambda x: r**x, lambda x: r**x / math.log(r))
    M = lambda shift: L ** (2 * m) * r ** (shift[0] - m / 2) / (1 - r)
    with criterion(7, "convergent series sanity", 1.0):
        tols = []
        for c in range(9):
            res = generalized_sum(f, m, c=(c,), M2m=M)
            assert abs(res.value - 2) <= res.remainder_bound
            tols.append(res.remainder_bound)
        assert all(a > b for a, b in zip(tols, tols[1:]))


def _random_cone(rng: random.Random) -> HalfOpenCone:
    p = rng.randint(1, 3)
    while True:
        cols = tuple(tuple(rng.randint(-4, 4) for _ in range(p)) for _ in range(p))
        if 2 <= abs(det(list(zip(*cols)))) <= 12:
            strict = frozenset(i for i in range(p) if rng.random() < 0.5)
            return HalfOpenCone((0,) * p, cols, strict, 1)


def _grid(cone: HalfOpenCone) -> list[tuple]:
    p = len(cone.generators)
    # small integer combinations of generators land on faces; add a rational grid
    pts = {tuple(sum(Fraction(c) * g[i] for c, g in zip(coef, cone.generators)) for i in range(p))
           for coef in itertools.product((0, Fraction(1, 2), 1, 2), repeat=p)}
    steps = {1: [Fraction(k, 8) for k in range(-200, 201)],
             2: [Fraction(k, 2) for k in range(-8, 9)],
             3: [Fraction(k, 1) for k in range(-3, 4)]}[p]
    pts.update(itertools.product(steps, repeat=p))
    return sorted(pts)


def test_08_cone_refinement():
    with criterion(8, "cone refinement", 60.0):
        rng = random.Random(8)
        for _ in range(100):
            parent = _random_cone(rng)
            kids = unimodular_refine(parent)
            assert all(k.is_unimodular for k in kids)
            pts = _grid(parent)
            assert len(pts) >= 200
            assert any(not cone_contains(parent, x) for x in pts)
            for x in pts:
                assert indicator_sum(kids, x) == int(cone_contains(parent, x))


def test_09_polytope_counts():
    with criterion(9, "polytope counts", 10.0):
        box = LatticePolytope([(0, 0), (5, 0), (5, 5), (0, 5)])
        assert count_lattice_points(box) == 36
        assert count_lattice_points(LatticePolytope([(0, 0), (4, 0), (0, 4)])) == 15
        for k in range(1, 7):
            assert count_lattice_points(LatticePolytope([(0, 0), (k, 0), (0, k)])) == (k + 1) * (k + 2) // 2
        quad = LatticePolytope([(0, 0), (2, 0), (3, 2), (0, 1)])
        brute = sum(1 for x in itertools.product(range(4), range(3)) if quad.contains(x))
        assert count_lattice_points(quad) == brute == len(lattice_points(quad))


POLYTOPES = [
    [(0, 0), (2, 0), (2, 2), (0, 2)],
    [(0, 0), (2, 0), (0, 2)],
    [(0, 0), (2, 0), (3, 2), (0, 1)],
    [(0, 0), (3, 1), (1, 3)],
    [(0, 0), (4, 1), (5, 3), (2, 5), (-1, 2)],
    list(itertools.product((0, 2), repeat=3)),
    [(0, 0, 0), (2, 0, 0), (0, 3, 0), (0, 0, 2)],
]


def test_10_pointwise_identity():
    with criterion(10, "pointwise Lawrence-Varchenko identity", 30.0):
        rng = random.Random(10)
        for verts in POLYTOPES:
            P = LatticePolytope(verts)
            lo, hi = P.bounding_box()
            pts = {tuple(Fraction(c) for c in v) for v in verts}
            while len(pts) < 500:
                pts.add(tuple(Fraction(rng.randint(6 * a - 6, 6 * b + 6), 6) for a, b in zip(lo, hi)))
            second = (-3, 5, 11) if P.p == 3 else (-7, 3)
            decs = [vertex_cones(P), vertex_cones(P, xi=second)]
            assert decs[0].xi != decs[1].xi
            for x in pts:
                want = int(P.contains(x))
                assert all(d.indicator(x) == want for d in decs)


def _phi_derivative_max(order: int, K: int = 8, center: float = 2.0, radius: float = 4.0) -> float:
    # phi(x) = (1 - t^2)^K with t = (x - center)/radius, a polynomial on its support
    t = np.polynomial.Polynomial([-center / radius, 1 / radius])
    poly = (1 - t * t) ** K
    xs = np.linspace(center - radius, center + radius, 20001)
    return float(np.max(np.abs(poly.deriv(order)(xs)))) if order else float(np.max(np.abs(poly(xs))))


def test_11_polytope_alt_consistency():
    K = 8

    def phi(x):
        t = (np.asarray(x, dtype=float) - 2.0) / 4.0
        return np.where(np.abs(t) < 1, (1 - t * t) ** K, 0.0)

    f = FieldSpec(2, lambda x, y: phi(x) * phi(y))
    support = ((-2, -2), (6, 6))
    P = LatticePolytope([(0, 0), (4, 0), (4, 4), (0, 4)])
    with criterion(11, "polytope Alt sum consistency", 60.0):
        exact = exact_polytope_sum(P, f)
        errs = []
        for m in (1, 2, 3):
            # per cone and axis at most 8 lattice points meet the open support,
            # and at most two cones per axis: 16 terms per axis
            M = 1.01 * max(256 * _phi_derivative_max(a) * _phi_derivative_max(2 * m - a) for a in range(2 * m + 1))
            val = polytope_alt_sum(P, f, m, support)
            box_path = evaluate_alt(f, m, (5, 5), force_quad=True).approximation
            assert abs(val - exact) <= bound_coarse(m, 2, M)
            assert abs(val - box_path) <= 10 * DEFAULT_QUAD.refinement_tolerance * max(1.0, abs(box_path))
            errs.append(abs(val - exact))
        assert all(a >= b for a, b in zip(errs, errs[1:])), errs


def test_12_cli_determinism(capsys):
    argv = ["sum", "--m", "3", "--n", "6,5", "--f", "exp(-x1*x2/9)*cos(x1)", "--seed", "12"]
    with criterion(12, "CLI determinism across thread counts", 5.0):
        outs = []
        for threads in (1, 2, 3, 4, 1):
            assert cli_main(argv + ["--threads", str(threads)]) == 0
            outs.append(capsys.readouterr().out.encode())
        assert len(set(outs)) == 1
        json.loads(outs[0])


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
