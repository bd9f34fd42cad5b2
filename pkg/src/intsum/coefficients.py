"""Exact rational coefficients of the integral-only summation formula.

Everything here is computed with :class:`fractions.Fraction` so that the
moment identities satisfied by the coefficients can be checked exactly.
Conversion to floating point is left to the callers that integrate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

Rational = Fraction
MultiIndex = tuple[int, ...]


class InvalidOrderError(ValueError):
    """Raised for an order ``m < 1``."""


@lru_cache(maxsize=None)
def _pascal_row(n: int) -> tuple[int, ...]:
    row = [1]
    for _ in range(n):
        row = [1] + [a + b for a, b in zip(row, row[1:])] + [1]
    return tuple(row)


def binomial(n: int, k: int) -> int:
    """Binomial coefficient from the integer Pascal triangle (0 outside range)."""
    if k < 0 or k > n:
        return 0
    return _pascal_row(n)[k]


@dataclass(frozen=True)
class CoefficientTable:
    """Rows ``gamma[j-1] = gamma_{m,j}`` and ``tau[j-1] = tau_{m,j}`` for j = 1..m."""

    m: int
    gamma: tuple[Fraction, ...]
    tau: tuple[Fraction, ...]

    def gamma_at(self, j: int) -> Fraction:
        if not 1 <= j <= self.m:
            raise IndexError(f"index {j} outside 1..{self.m}")
        return self.gamma[j - 1]

    def tau_at(self, j: int) -> Fraction:
        if not 1 <= j <= self.m:
            raise IndexError(f"index {j} outside 1..{self.m}")
        return self.tau[j - 1]


@lru_cache(maxsize=None)
def gamma_table(m: int) -> CoefficientTable:
    """Build the exact coefficient table of order ``m``.

    ``gamma_{m,j} = (-1)^(j-1) (2/j) C(2m, m+j) / C(2m, m)`` and ``tau_{m,j}``
    is the sum of ``gamma_{m,j+2b}`` over ``b >= 0``. Tables are cached and
    immutable.
    """
    if not isinstance(m, int) or m < 1:
        raise InvalidOrderError(f"order m must be a positive integer, got {m!r}")
    center = binomial(2 * m, m)
    gamma = tuple(
        (-1) ** (j - 1) * Fraction(2 * binomial(2 * m, m + j), j * center)
        for j in range(1, m + 1)
    )
    tau = tuple(sum(gamma[j - 1 :: 2], Fraction(0)) for j in range(1, m + 1))
    return CoefficientTable(m, gamma, tau)


def tau_of(table: CoefficientTable, multi_j: Sequence[int]) -> Fraction:
    """Product ``prod_r tau_{m, j_r}`` over a multi-index."""
    out = Fraction(1)
    for j in multi_j:
        out *= table.tau_at(j)
    return out


def gamma_of(table: CoefficientTable, multi_j: Sequence[int]) -> Fraction:
    """Product ``prod_r gamma_{m, j_r}`` over a multi-index."""
    out = Fraction(1)
    for j in multi_j:
        out *= table.gamma_at(j)
    return out


@lru_cache(maxsize=None)
def bernoulli(j: int) -> Fraction:
    """Bernoulli number ``B_j`` with the convention ``B_1 = -1/2``."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    if j == 0:
        return Fraction(1)
    # sum_{i=0}^{j} C(j+1, i) B_i = 0
    acc = sum((binomial(j + 1, i) * bernoulli(i) for i in range(j)), Fraction(0))
    return -acc / (j + 1)


def compositions(total: int, parts: int) -> list[MultiIndex]:
    """All nonnegative ``parts``-tuples summing to ``total``, lexicographically."""
    if parts < 1:
        raise ValueError("parts must be positive")
    if total < 0:
        return []
    if parts == 1:
        return [(total,)]
    out: list[MultiIndex] = []
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            out.append((first, *rest))
    return out


def multi_factorial(alpha: Iterable[int]) -> int:
    """``alpha! = prod alpha_r!``."""
    return math.prod(math.factorial(a) for a in alpha)


def format_rational(q: Fraction) -> str:
    """Always ``"num/den"`` (``"1/1"`` for one) so consumers parse one shape."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"
