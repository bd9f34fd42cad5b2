"""Integral-only approximation of multiple sums.

The sum ``sum_{0 <= k <= n-1} f(k)`` over a box of lattice points is
approximated by a weighted combination of integrals of ``f`` over shifted
boxes. Six algebraically equivalent layouts of the weights and boxes are
available as integral plans:

``gamma-left`` / ``gamma-right``
    weights ``gamma_{m,j}`` over ``1 <= j <= m`` and ``0 <= i <= j-1``.
``tau-symmetric-left`` / ``tau-symmetric-right``
    weights ``tau_{m,1+|b|}`` over ``(1-m) <= b <= (m-1)``.
``tau-grouped-left`` / ``tau-grouped-right``
    the same terms collected by ``a = |b|``.

"left" layouts use boxes symmetric about ``(n-1)/2``; "right" layouts use
boxes whose extents all equal ``n``.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .boxcalc import (
    DEFAULT_QUAD,
    BoxDomain,
    CapabilityError,
    FieldSpec,
    QuadratureConfig,
    integrate_ftc,
    integrate_quad,
)
from .coefficients import (
    compositions,
    bernoulli,
    gamma_of,
    gamma_table,
    multi_factorial,
    tau_of,
)

FORMS = (
    "gamma-left",
    "gamma-right",
    "tau-symmetric-left",
    "tau-symmetric-right",
    "tau-grouped-left",
    "tau-grouped-right",
)
DEFAULT_FORM = "tau-grouped-right"
DEFAULT_SUM_CAP = 10**7


class SizeError(ValueError):
    """A brute-force enumeration would exceed its configured cap."""


@dataclass(frozen=True)
class PlanTerm:
    weight: Fraction
    box: BoxDomain


@dataclass(frozen=True)
class IntegralPlan:
    form_id: str
    m: int
    n: tuple[int, ...]
    terms: tuple[PlanTerm, ...]

    def weight_sum(self) -> Fraction:
        return sum((t.weight for t in self.terms), Fraction(0))

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class AltResult:
    approximation: object
    exact_sum: Optional[object] = None
    residual: Optional[object] = None


def _check_n(n: Sequence[int]) -> tuple[int, ...]:
    n = tuple(int(x) for x in n)
    if any(x < 0 for x in n):
        raise ValueError(f"n must be entrywise nonnegative, got {n}")
    return n


def build_plan(m: int, n: Sequence[int], form_id: str = DEFAULT_FORM) -> IntegralPlan:
    """Weighted boxes realizing the order-``m`` approximation in layout ``form_id``."""
    table = gamma_table(m)
    n = _check_n(n)
    if form_id not in FORMS:
        raise ValueError(f"unknown form {form_id!r}; expected one of {', '.join(FORMS)}")
    p = len(n)
    if p == 0:
        raise ValueError("dimension must be at least 1")
    if min(n) == 0:
        return IntegralPlan(form_id, m, n, ())
    half = Fraction(1, 2)
    terms: list[PlanTerm] = []
    if form_id.startswith("gamma"):
        left = form_id.endswith("left")
        for j in itertools.product(range(1, m + 1), repeat=p):
            w = gamma_of(table, j)
            for i in itertools.product(*(range(jr) for jr in j)):
                up = tuple(nr - 1 + jr * half - ir for nr, jr, ir in zip(n, j, i))
                if left:
                    lo = tuple(ir - jr * half for jr, ir in zip(j, i))
                else:
                    lo = tuple(-1 + jr * half - ir for jr, ir in zip(j, i))
                terms.append(PlanTerm(w, BoxDomain(lo, up)))
    else:
        left = form_id.endswith("left")
        if form_id.startswith("tau-symmetric"):
            betas = list(itertools.product(range(1 - m, m), repeat=p))
        else:
            betas = []
            for a in itertools.product(range(m), repeat=p):
                for signs in itertools.product(*([1, -1] if ar else [1] for ar in a)):
                    betas.append(tuple(s * ar for s, ar in zip(signs, a)))
        for b in betas:
            w = tau_of(table, [1 + abs(br) for br in b])
            up = tuple(nr - half - br * half for nr, br in zip(n, b))
            if left:
                lo = tuple(br * half - half for br in b)
            else:
                lo = tuple(-half - br * half for br in b)
            terms.append(PlanTerm(w, BoxDomain(lo, up)))
    return IntegralPlan(form_id, m, n, tuple(terms))


def default_threads() -> int:
    env = os.environ.get("ALTSUM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def weighted_box_sum(
    f: FieldSpec,
    terms: Sequence[PlanTerm],
    cfg: QuadratureConfig = DEFAULT_QUAD,
    exact: bool = False,
    force_quad: bool = False,
    threads: int = 1,
):
    """``sum weight * integral(box)``; reduction order is the term order."""
    use_ftc = f.F is not None and not force_quad
    if exact and not use_ftc:
        raise CapabilityError("exact evaluation needs an antiderivative")

    def one(term: PlanTerm):
        if use_ftc:
            return integrate_ftc(f.F, term.box, exact=exact)
        return integrate_quad(f, term.box, cfg)

    if threads > 1 and len(terms) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, terms))
    else:
        values = [one(t) for t in terms]
    if exact:
        return sum((t.weight * v for t, v in zip(terms, values)), Fraction(0))
    total = 0.0
    for t, v in zip(terms, values):
        total += float(t.weight) * v
    return total


def evaluate_alt(
    f: FieldSpec,
    m: int,
    n: Sequence[int],
    form_id: str = DEFAULT_FORM,
    cfg: QuadratureConfig = DEFAULT_QUAD,
    *,
    exact: bool = False,
    force_quad: bool = False,
    with_exact_sum: bool = False,
    threads: int = 1,
) -> AltResult:
    """Approximate ``sum_{k=0}^{n-1} f(k)`` by integrals only.

    The corner-sum route is taken whenever ``f.F`` is available unless
    ``force_quad`` is set. ``exact=True`` runs that route in rational
    arithmetic, which makes polynomial exactness checks bit-exact.
    """
    n = _check_n(n)
    if len(n) != f.p:
        raise ValueError(f"n has {len(n)} entries but f has dimension {f.p}")
    plan = build_plan(m, n, form_id)
    approx = weighted_box_sum(f, plan.terms, cfg, exact=exact, force_quad=force_quad, threads=threads)
    if not with_exact_sum:
        return AltResult(approx)
    total = exact_sum(f, n, exact=exact)
    return AltResult(approx, total, total - approx)


def exact_sum(f: FieldSpec, n: Sequence[int], cap: int = DEFAULT_SUM_CAP, exact: bool = False):
    """Plain iterated sum over ``0 <= k <= n-1``, last index fastest."""
    n = _check_n(n)
    count = math.prod(n)
    if count > cap:
        raise SizeError(f"{count} summands exceed the cap of {cap}")
    if count == 0:
        return Fraction(0) if exact else 0.0
    if exact:
        total = Fraction(0)
        for k in itertools.product(*(range(nr) for nr in n)):
            total += f.f(*(Fraction(kr) for kr in k))
        return total
    return float(_lattice_sum(f.f, [np.arange(nr, dtype=float) for nr in n]))


def _lattice_sum(func, axes: list[np.ndarray], offset: Sequence[float] | None = None) -> float:
    p = len(axes)
    grids = []
    for r, ax in enumerate(axes):
        shape = [1] * p
        shape[r] = len(ax)
        pts = ax if offset is None else ax + offset[r]
        grids.append(pts.reshape(shape))
    vals = np.broadcast_to(np.asarray(func(*grids), dtype=float), tuple(len(a) for a in axes))
    return float(vals.sum())


def remainder_direct(
    f: FieldSpec,
    m: int,
    n: Sequence[int],
    cfg: QuadratureConfig = DEFAULT_QUAD,
    s_nodes: int = 32,
) -> float:
    """Evaluate the integral remainder ``R_m`` (so that sum = A_m - R_m) numerically.

    Uses a Gauss-Legendre rule with ``s_nodes`` nodes in ``s`` (weight
    ``(1-s)^(2m-1)``) and a composite tensor rule from ``cfg`` on ``[-1,1]^p``.
    """
    n = _check_n(n)
    p = len(n)
    if f.derivative is None:
        raise CapabilityError("remainder_direct needs f.derivative")
    if p > 3 or m > 3:
        raise ValueError("remainder_direct is limited to p <= 3 and m <= 3")
    if p != f.p:
        raise ValueError("dimension mismatch between n and f")
    table = gamma_table(m)
    if min(n) == 0:
        return 0.0

    xs, ws = np.polynomial.legendre.leggauss(s_nodes)
    s = 0.5 * (xs + 1.0)
    s_w = 0.5 * ws * (1.0 - s) ** (2 * m - 1)

    panels = 2 * cfg.panels_per_unit
    gl, gw = np.polynomial.legendre.leggauss(cfg.nodes_per_panel)
    edges = np.linspace(-1.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    v = (mid[:, None] + half[:, None] * gl[None, :]).ravel()
    v_w = (half[:, None] * gw[None, :]).ravel()

    # axes: v_1..v_p, k_1..k_p; s handled by an outer loop
    ndim = 2 * p

    def along(arr, axis):
        shape = [1] * ndim
        shape[axis] = len(arr)
        return arr.reshape(shape)

    ks = [along(np.arange(nr, dtype=float), p + r) for r, nr in enumerate(n)]
    vs = [along(v, r) for r in range(p)]
    full = tuple([len(v)] * p + list(n))

    total = 0.0
    for alpha in compositions(2 * m, p):
        deriv = f.deriv(alpha)
        v_weights = [v_w * v ** alpha[r] for r in range(p)]
        inner = 0.0
        for j in itertools.product(range(1, m + 1), repeat=p):
            coeff = float(gamma_of(table, j)) * math.prod(jr ** (ar + 1) for jr, ar in zip(j, alpha))
            acc = 0.0
            for s_k, w_k in zip(s, s_w):
                pts = [ks[r] + (s_k * j[r] * 0.5) * vs[r] for r in range(p)]
                vals = np.broadcast_to(np.asarray(deriv(*pts), dtype=float), full)
                vals = vals.sum(axis=tuple(range(p, ndim)))
                for r in range(p - 1, -1, -1):
                    vals = vals @ v_weights[r]
                acc += w_k * float(vals)
            inner += coeff * acc
        total += inner / multi_factorial(alpha)
    return m / 2 ** (2 * m + p - 1) * total


def em_sum_1d(f: FieldSpec, m: int, n: int):
    """Euler-Maclaurin approximation of ``sum_{k=0}^{n-1} f(k)`` (p = 1 only).

    Needs ``f.F`` for the integral and ``f.derivative`` for orders
    ``1..2m-2``; ``B_j`` with odd ``j >= 3`` vanish and are skipped.
    """
    if f.p != 1:
        raise CapabilityError("the Euler-Maclaurin baseline is one-dimensional")
    if f.F is None:
        raise CapabilityError("em_sum_1d needs an antiderivative")
    gamma_table(m)  # validates m
    total = float(f.F(float(n))) - float(f.F(0.0))
    for j in range(1, 2 * m):
        b = bernoulli(j)
        if b == 0:
            continue
        g = f.f if j == 1 else f.deriv((j - 1,))
        total += float(b) / math.factorial(j) * (float(g(float(n))) - float(g(0.0)))
    return total
