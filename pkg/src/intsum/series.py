"""Generalized sums of possibly divergent multi-index series.

Given an antiderivative ``F`` (mixed partial ``F^{(1,...,1)} = f``), the
generalized sum is the limit of ``sum_{k<n} f(k) - A~_{m,F}(n)``. At a shift
``c`` it is estimated as ``sum_{k<c} f(k) - A~_{m,F}(c)``; the omitted
remainder decays as ``min(c)`` grows and is only ever bounded, never summed.

Convergence hypotheses (decay of order-2m derivatives of F, uniform
convergence of derivative series) are the caller's responsibility.
Subsets ``J`` of the coordinates are given as collections of 0-based indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .altsum import exact_sum
from .bounds import bound_coarse
from .boxcalc import CapabilityError, FieldSpec
from .coefficients import compositions, gamma_table, tau_of


class OrderError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesResult:
    value: object
    shift: tuple[int, ...]
    partial_sum: object
    correction: object
    order: int
    remainder_bound: Optional[float] = None


def _beta_points(m: int, p: int):
    """``(tau weight, beta)`` in grouped order: by ``a = |beta|``, then signs."""
    table = gamma_table(m)
    for a in itertools.product(range(m), repeat=p):
        w = tau_of(table, [1 + ar for ar in a])
        for signs in itertools.product(*([1, -1] if ar else [1] for ar in a)):
            yield w, tuple(s * ar for s, ar in zip(signs, a))


def a_superscript_j(F, m: int, n: Sequence[int], J: Iterable[int], exact: bool = False):
    """``A^J_{m,F}(n) = sum_beta tau_{m,1+|beta|} F(n 1_J - 1/2 - beta/2)``."""
    n = tuple(n)
    p = len(n)
    J = frozenset(J)
    if not J <= set(range(p)):
        raise IndexError(f"subset {sorted(J)} not within 0..{p - 1}")
    half = Fraction(1, 2)
    total = Fraction(0) if exact else 0.0
    for w, beta in _beta_points(m, p):
        x = tuple((n[r] if r in J else 0) - half - b * half for r, b in enumerate(beta))
        if exact:
            total += w * F(*x)
        else:
            total += float(w) * float(F(*(float(xr) for xr in x)))
    return total


def nonempty_subsets(p: int):
    for size in range(1, p + 1):
        yield from itertools.combinations(range(p), size)


def a_tilde(F, m: int, n: Sequence[int], exact: bool = False):
    """``sum_{J nonempty} (-1)^(p-|J|) A^J_{m,F}(n)``."""
    p = len(n)
    total = Fraction(0) if exact else 0.0
    for J in nonempty_subsets(p):
        term = a_superscript_j(F, m, n, J, exact=exact)
        total += term if (p - len(J)) % 2 == 0 else -term
    return total


M2mSpec = Union[float, Fraction, Callable[[tuple[int, ...]], float]]


def _shift_bound(m: int, p: int, c: tuple[int, ...], M2m: M2mSpec) -> float:
    # the shifted remainder is a signed combination of 2^p - 1 series
    # remainders, one for each shift c*1_J
    total = 0.0
    for J in nonempty_subsets(p):
        shift = tuple(c[r] if r in J else 0 for r in range(p))
        M = M2m(shift) if callable(M2m) else M2m
        total += bound_coarse(m, p, M)
    return total


def generalized_sum(
    f: FieldSpec,
    m: int,
    m0: Optional[int] = None,
    c: Optional[Sequence[int]] = None,
    M2m: Optional[M2mSpec] = None,
    exact: bool = False,
    cap: int = 10**7,
) -> SeriesResult:
    """Estimate the generalized sum of ``sum_{k >= 0} f(k)`` at shift ``c``.

    ``m0`` only fixes the order entering the defining limit; the limit does
    not depend on the order used, so the estimate uses ``m`` throughout.
    ``M2m`` is either a number (the same bound for every shifted function)
    or a callable ``shift -> bound`` for ``f(. + shift)``. When given, the
    result carries a bound on the omitted remainder.
    """
    if f.F is None:
        raise CapabilityError("generalized_sum needs an antiderivative F")
    m0 = m if m0 is None else m0
    if m0 < 1 or m0 > m:
        raise OrderError(f"need 1 <= m0 <= m, got m0={m0}, m={m}")
    c = tuple(int(x) for x in (c if c is not None else (0,) * f.p))
    if len(c) != f.p or any(x < 0 for x in c):
        raise ValueError(f"shift must be a nonnegative {f.p}-vector, got {c}")
    partial = exact_sum(f, c, cap=cap, exact=exact)
    corr = a_tilde(f.F, m, c, exact=exact)
    bound = None if M2m is None else _shift_bound(m, f.p, c, M2m)
    return SeriesResult(partial - corr, c, partial, corr, m, bound)


def shift_consistency(
    f: FieldSpec,
    m: int,
    m0: Optional[int],
    c_list: Iterable[Sequence[int]],
    M2m: Optional[M2mSpec] = None,
    exact: bool = False,
) -> list[tuple[tuple[int, ...], SeriesResult]]:
    """``generalized_sum`` at each shift, for judging remainder decay."""
    return [
        (tuple(c), generalized_sum(f, m, m0, c, M2m=M2m, exact=exact)) for c in c_list
    ]


def decay_diagnostic(
    F, p: int, m0: int, radii: Sequence[float], h: float = 1e-2
) -> list[tuple[float, float]]:
    """HEURISTIC: central-difference estimates of ``max |F^(alpha)(t*1)|``.

    For each ``t`` in ``radii`` returns ``(t, max over |alpha| = 2 m0)``.
    A decreasing trend is consistent with, never proof of, the decay
    hypothesis on ``F``.
    """
    out = []
    for t in radii:
        worst = 0.0
        for alpha in compositions(2 * m0, p):
            worst = max(worst, abs(_central_difference(F, [t] * p, alpha, h)))
        out.append((t, worst))
    return out


def _central_difference(F, x: Sequence[float], alpha: Sequence[int], h: float) -> float:
    # tensor product of 1-D central difference stencils of order alpha_r
    stencils = []
    for a in alpha:
        coeffs = np.array([(-1) ** i * _binom(a, i) for i in range(a + 1)], dtype=float)
        offsets = np.array([a / 2 - i for i in range(a + 1)]) * h
        stencils.append((coeffs, offsets))
    total = 0.0
    for combo in itertools.product(*(range(len(s[0])) for s in stencils)):
        w = 1.0
        pt = []
        for r, i in enumerate(combo):
            w *= stencils[r][0][i]
            pt.append(x[r] + stencils[r][1][i])
        total += w * float(F(*pt))
    return total / h ** sum(alpha)


def _binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)
