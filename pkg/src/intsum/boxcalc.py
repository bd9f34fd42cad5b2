"""Signed integrals of a function over axis-aligned boxes.

Two routes are provided: the multidimensional fundamental theorem of calculus
(alternating corner sum of an antiderivative ``F`` with mixed partial
``d^p F / dx_1 ... dx_p = f``) and composite tensor Gauss-Legendre quadrature.

Boxes follow the signed convention: integrating from ``lower`` to ``upper``
where ``lower_r > upper_r`` contributes a factor ``-1`` for that axis.

Functions are called as ``f(x1, ..., xp)`` with each argument either a scalar
or a numpy array (all arguments broadcast together), the usual numpy style.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

Func = Callable[..., object]


class EvaluationError(ArithmeticError):
    """A function value needed for an integral was not finite."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class ToleranceNotMetError(ArithmeticError):
    """Panel doubling did not settle within the allowed refinements."""

    def __init__(self, message: str, values: tuple[float, float]):
        super().__init__(message)
        self.values = values


class CapabilityError(ValueError):
    """The supplied function lacks an oracle required by the operation."""


@dataclass(frozen=True)
class BoxDomain:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper have different dimensions")

    @property
    def p(self) -> int:
        return len(self.lower)

    @classmethod
    def of(cls, lower: Sequence, upper: Sequence) -> "BoxDomain":
        return cls(tuple(lower), tuple(upper))


@dataclass(frozen=True)
class FieldSpec:
    """A real function of ``p`` variables plus optional oracles.

    ``F`` is an antiderivative in the sense ``F^{(1,...,1)} = f``.
    ``derivative(alpha)`` returns the partial derivative ``f^{(alpha)}`` as a
    callable with the same calling convention as ``f``.
    """

    p: int
    f: Func
    F: Optional[Func] = None
    derivative: Optional[Callable[[tuple[int, ...]], Func]] = None
    name: str = ""

    def __call__(self, *xs):
        return self.f(*xs)

    def deriv(self, alpha: Sequence[int]) -> Func:
        if self.derivative is None:
            raise CapabilityError(f"function {self.name or '<anonymous>'} has no derivative oracle")
        alpha = tuple(int(a) for a in alpha)
        if not any(alpha):
            return self.f
        return self.derivative(alpha)


@dataclass(frozen=True)
class QuadratureConfig:
    nodes_per_panel: int = 8
    panels_per_unit: int = 2
    refinement_tolerance: float = 1e-10
    max_refinements: int = 6

    def __post_init__(self):
        if self.nodes_per_panel < 1 or self.panels_per_unit < 1:
            raise ValueError("nodes_per_panel and panels_per_unit must be positive")
        if not self.refinement_tolerance > 0:
            raise ValueError("refinement_tolerance must be positive")


DEFAULT_QUAD = QuadratureConfig()


def _gray_corners(lower: Sequence, upper: Sequence):
    """Yield ``(subset_size, corner)`` over all 2^p corners in Gray-code order.

    Consecutive corners differ in one coordinate, so each step rewrites a
    single entry of the running corner.
    """
    p = len(lower)
    corner = list(lower)
    mask = 0
    yield 0, tuple(corner)
    for i in range(1, 1 << p):
        r = (i & -i).bit_length() - 1
        mask ^= 1 << r
        corner[r] = upper[r] if mask >> r & 1 else lower[r]
        yield mask.bit_count(), tuple(corner)


def integrate_ftc(F: Func, box: BoxDomain, exact: bool = False):
    """Signed box integral of ``f`` as the alternating corner sum of ``F``.

    With ``exact=True`` the corners are converted to :class:`Fraction` and the
    sum is accumulated exactly (``F`` must then be rational-valued on rationals).
    """
    lower, upper = box.lower, box.upper
    if exact:
        lower = tuple(Fraction(x) for x in lower)
        upper = tuple(Fraction(x) for x in upper)
    else:
        lower = tuple(float(x) for x in lower)
        upper = tuple(float(x) for x in upper)
    p = len(lower)
    total = Fraction(0) if exact else 0.0
    for size, corner in _gray_corners(lower, upper):
        value = F(*corner)
        if not exact:
            value = float(value)
            if not math.isfinite(value):
                raise EvaluationError(f"antiderivative not finite at corner {corner}", corner)
        if (p - size) % 2:
            total -= value
        else:
            total += value
    return total


@lru_cache(maxsize=64)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _composite_rule(lo: float, hi: float, panels: int, nodes: int):
    x, w = _legendre(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


_CHUNK = 1 << 20


def _tensor_quad(func: Func, lows, highs, panels, nodes) -> float:
    rules = [_composite_rule(lo, hi, n, nodes) for lo, hi, n in zip(lows, highs, panels)]
    p = len(rules)
    rest = math.prod(len(r[0]) for r in rules[1:])
    step = max(1, _CHUNK // max(rest, 1))
    x0, w0 = rules[0]
    total = 0.0
    for start in range(0, len(x0), step):
        grids = []
        for r, (pts, _) in enumerate(rules):
            if r == 0:
                pts = pts[start : start + step]
            shape = [1] * p
            shape[r] = len(pts)
            grids.append(pts.reshape(shape))
        shape = tuple(len(g.ravel()) for g in grids)
        vals = np.broadcast_to(np.asarray(func(*grids), dtype=float), shape)
        for r in range(p - 1, 0, -1):
            vals = vals @ rules[r][1]
        total += float(vals @ w0[start : start + step])
    if not math.isfinite(total):
        raise EvaluationError("integrand not finite on the quadrature grid")
    return total


def integrate_quad(f, box: BoxDomain, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Signed box integral by composite tensor Gauss-Legendre with panel doubling.

    The panel count per axis starts at ``ceil(panels_per_unit * length)`` and is
    doubled until two successive values differ by at most
    ``refinement_tolerance * max(1, |value|)``.
    """
    func = f.f if isinstance(f, FieldSpec) else f
    sign = 1.0
    lows, highs = [], []
    for u, v in zip(box.lower, box.upper):
        u, v = float(u), float(v)
        if u > v:
            sign = -sign
            u, v = v, u
        if u == v:
            return 0.0
        lows.append(u)
        highs.append(v)
    panels = [max(1, math.ceil(cfg.panels_per_unit * (v - u))) for u, v in zip(lows, highs)]
    prev = _tensor_quad(func, lows, highs, panels, cfg.nodes_per_panel)
    older = prev
    for _ in range(cfg.max_refinements):
        panels = [2 * n for n in panels]
        cur = _tensor_quad(func, lows, highs, panels, cfg.nodes_per_panel)
        if abs(cur - prev) <= cfg.refinement_tolerance * max(1.0, abs(cur)):
            return sign * cur
        older, prev = prev, cur
    raise ToleranceNotMetError(
        f"quadrature did not converge after {cfg.max_refinements} doublings",
        (sign * older, sign * prev),
    )
