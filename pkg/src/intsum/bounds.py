"""Remainder bounds for the integral-only summation formula."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .boxcalc import FieldSpec
from .coefficients import CoefficientTable, compositions, gamma_table, multi_factorial

FACTOR_GENERAL = 1.0331
FACTOR_M_GE_2 = 1.001


class InvalidFlagError(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    m: int
    p: int
    M2m: float
    tight_bound: float
    coarse_bound: float
    factor: float


def lambda_fn(t: float) -> float:
    """``(1-t)^(t-1) (1+t)^(-1-t) t^2`` evaluated through logs."""
    return math.exp(_log_lambda(t))


def _log_lambda(t: float) -> float:
    return (t - 1) * math.log1p(-t) - (1 + t) * math.log1p(t) + 2 * math.log(t)


@lru_cache(maxsize=1)
def lambda_star() -> tuple[float, float]:
    """Maximizer and maximum of ``lambda_fn`` on (0, 1), by golden section."""
    lo, hi = 1e-6, 1 - 1e-6
    grid = np.linspace(lo, hi, 65)
    vals = [_log_lambda(t) for t in grid]
    i = int(np.argmax(vals))
    i = min(max(i, 1), len(grid) - 2)
    res = minimize_scalar(
        lambda t: -_log_lambda(t),
        bracket=(grid[i - 1], grid[i], grid[i + 1]),
        method="golden",
        tol=1e-12,
    )
    return float(res.x), math.exp(-float(res.fun))


def kappa() -> float:
    return math.sqrt(lambda_star()[1] / 4)


@lru_cache(maxsize=None)
def _tight_factor(m: int, p: int) -> Fraction:
    table = gamma_table(m)
    abs_g = [abs(g) for g in table.gamma]
    # inner sum over j in [1, m]^p factorizes per coordinate
    moment = {e: sum((g * j**e for j, g in enumerate(abs_g, start=1)), Fraction(0)) for e in range(1, 2 * m + 2)}
    total = Fraction(0)
    for alpha in compositions(2 * m, p):
        term = Fraction(1, multi_factorial(a + 1 for a in alpha))
        for a in alpha:
            term *= moment[a + 1]
        total += term
    return total / 2 ** (2 * m)


def bound_tight(table: CoefficientTable, p: int, M2m):
    """First remainder bound; the combinatorial factor is exact, then scaled by ``M2m``.

    Returns a Fraction when ``M2m`` is int or Fraction, else a float.
    """
    if M2m < 0:
        raise ValueError("M2m must be nonnegative")
    factor = _tight_factor(table.m, int(p))
    if isinstance(M2m, (int, Fraction)):
        return factor * M2m
    return float(factor) * float(M2m)


def bound_coarse(m: int, p: int, M2m: float, strict_m_ge_2: bool = False) -> float:
    """Closed-form remainder bound ``M (factor (pi m)^((p+1)/2) / (2m+1)!) (kappa p m)^(2m)``."""
    if M2m < 0:
        raise ValueError("M2m must be nonnegative")
    if strict_m_ge_2 and m < 2:
        raise InvalidFlagError("the 1.001 factor is only valid for m >= 2")
    gamma_table(m)
    factor = FACTOR_M_GE_2 if strict_m_ge_2 else FACTOR_GENERAL
    return (
        float(M2m)
        * factor
        * (math.pi * m) ** ((p + 1) / 2)
        / math.factorial(2 * m + 1)
        * (kappa() * p * m) ** (2 * m)
    )


def bound_report(m: int, p: int, M2m: float, strict_m_ge_2: bool = False) -> BoundReport:
    tight = float(bound_tight(gamma_table(m), p, M2m))
    coarse = bound_coarse(m, p, M2m, strict_m_ge_2)
    factor = FACTOR_M_GE_2 if strict_m_ge_2 else FACTOR_GENERAL
    return BoundReport(m, p, float(M2m), tight, coarse, factor)


def heuristic_m2m(f: FieldSpec, m: int, n: Sequence[int], points_per_axis: int = 5) -> float:
    """HEURISTIC, not a bound: max over sampled shifts u in the closed box
    ``[-m/2, m/2]^p`` of ``|sum_{k<n} f^(alpha)(k+u)|`` over ``|alpha| = 2m``.

    Sampling a finite grid of shifts can miss the supremum; use only as a
    diagnostic when choosing ``M2m``.
    """
    n = tuple(int(x) for x in n)
    p = len(n)
    shifts = np.linspace(-m / 2, m / 2, points_per_axis)
    axes = []
    for r, nr in enumerate(n):
        shape = [1] * p
        shape[r] = nr
        axes.append(np.arange(nr, dtype=float).reshape(shape))
    best = 0.0
    for alpha in compositions(2 * m, p):
        d = f.deriv(alpha)
        for u in itertools.product(shifts, repeat=p):
            vals = np.broadcast_to(np.asarray(d(*(a + ur for a, ur in zip(axes, u))), dtype=float), n)
            best = max(best, abs(float(vals.sum())))
    return best
