"""Half-open simplicial integer cones and their unimodular refinement.

A cone is ``apex + A R+_J`` where the columns of the integer matrix ``A`` are
the generators and ``R+_J`` is the orthant whose coordinates in ``J`` are
strict (``> 0``) and the rest closed (``>= 0``). Sets of coordinates are
0-based.

Refinement picks a nonzero lattice point ``w`` of the half-open fundamental
parallelepiped, swaps it in for each generator with a positive coefficient,
and assigns strictness to the children so that they partition the parent
exactly, half-open faces included. Children have strictly smaller
``|det|``, so recursion ends in unimodular cones.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

Vector = tuple[int, ...]
Matrix = tuple[tuple[int, ...], ...]


class InternalConsistencyError(AssertionError):
    pass


def det(rows: Sequence[Sequence[int]]) -> int:
    """Integer determinant by fraction-free (Bareiss) elimination."""
    a = [list(r) for r in rows]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


def adjugate(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Integer adjugate, so that ``A^{-1} = adj(A) / det(A)``."""
    n = len(rows)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[rows[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            adj[j][i] = (-1) ** (i + j) * det(minor)
    return adj


def columns_to_rows(cols: Sequence[Sequence[int]]) -> Matrix:
    return tuple(zip(*cols))


def matvec(rows: Sequence[Sequence], x: Sequence) -> tuple:
    return tuple(sum(a * b for a, b in zip(row, x)) for row in rows)


@dataclass(frozen=True)
class HalfOpenCone:
    """``apex + sum_i t_i g_i`` with ``t_i > 0`` for ``i`` in ``strict``, else ``t_i >= 0``."""

    apex: Vector
    generators: tuple[Vector, ...]
    strict: frozenset[int] = frozenset()
    sign: int = 1
    _adj: Matrix = field(init=False, repr=False, compare=False)
    _det: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        apex = tuple(int(x) for x in self.apex)
        gens = tuple(tuple(int(x) for x in g) for g in self.generators)
        object.__setattr__(self, "apex", apex)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "strict", frozenset(self.strict))
        p = len(apex)
        if len(gens) != p or any(len(g) != p for g in gens):
            raise ValueError("need p generators of length p")
        if not self.strict <= set(range(p)):
            raise ValueError("strict set out of range")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        rows = columns_to_rows(gens)
        d = det(rows)
        if d == 0:
            raise ValueError("generators are linearly dependent")
        object.__setattr__(self, "_det", d)
        object.__setattr__(self, "_adj", tuple(tuple(r) for r in adjugate(rows)))

    @property
    def p(self) -> int:
        return len(self.apex)

    @property
    def matrix(self) -> Matrix:
        """Rows of the generator matrix (generators are its columns)."""
        return columns_to_rows(self.generators)

    @property
    def determinant(self) -> int:
        return self._det

    @property
    def is_unimodular(self) -> bool:
        return abs(self._det) == 1

    def coordinates(self, x: Sequence) -> tuple[Fraction, ...]:
        """Exact ``A^{-1} (x - apex)``."""
        diff = [Fraction(xi) - a for xi, a in zip(x, self.apex)]
        return tuple(Fraction(v) / self._det for v in matvec(self._adj, diff))

    def to_dict(self) -> dict:
        return {
            "apex": list(self.apex),
            "generators": [list(g) for g in self.generators],
            "strict": sorted(self.strict),
            "sign": self.sign,
            "det": self._det,
        }


def _scaled(x: Sequence) -> tuple[list[int], int]:
    """Integers ``X`` and ``q > 0`` with ``x = X / q``."""
    fr = [xi if isinstance(xi, int) else Fraction(xi) for xi in x]
    q = math.lcm(*(1 if isinstance(v, int) else v.denominator for v in fr))
    return [v * q if isinstance(v, int) else v.numerator * (q // v.denominator) for v in fr], q


def _contains_scaled(cone: HalfOpenCone, X: Sequence[int], q: int) -> bool:
    num = matvec(cone._adj, [xi - q * a for xi, a in zip(X, cone.apex)])
    s = 1 if cone._det > 0 else -1
    # y = num / (q det); only signs matter
    return all((s * v > 0) if j in cone.strict else (s * v >= 0) for j, v in enumerate(num))


def cone_contains(cone: HalfOpenCone, x: Sequence) -> bool:
    """Exact membership of a rational point (ints, Fractions or floats)."""
    X, q = _scaled(x)
    return _contains_scaled(cone, X, q)


def parallelepiped_coords(cols: Sequence[Sequence[int]], w: Sequence[int]) -> tuple[Fraction, ...]:
    rows = columns_to_rows(cols)
    d = det(rows)
    return tuple(Fraction(v, d) for v in matvec(adjugate(rows), w))


def find_w(cols: Sequence[Sequence[int]]) -> Vector:
    """Lexicographically smallest nonzero integer ``w`` with ``A^{-1} w`` in ``[0,1)^p``.

    ``cols`` are the generator columns of ``A``; requires ``|det A| >= 2``.
    """
    rows = columns_to_rows(cols)
    d = det(rows)
    if abs(d) < 2:
        raise ValueError("find_w needs |det A| >= 2")
    adj = adjugate(rows)
    s = 1 if d > 0 else -1
    ad = abs(d)
    # the parallelepiped lies in [sum of negative entries, sum of positive entries] per row
    ranges = [range(sum(min(0, a) for a in row), sum(max(0, a) for a in row) + 1) for row in rows]
    for w in itertools.product(*ranges):
        if not any(w):
            continue
        if all(0 <= s * v < ad for v in matvec(adj, w)):
            return tuple(w)
    raise InternalConsistencyError("no lattice point in the fundamental parallelepiped")


def epsilon_assignment(base_eps: Sequence[int], K: Iterable[int]) -> dict[int, tuple[int, ...]]:
    """Closedness flags ``eps[i][j]`` for the children ``i`` in ``K``.

    ``base_eps[j]`` is 1 for a closed coordinate and 0 for a strict one.
    Inside ``K`` the indices are ranked by ``(base_eps, index)``; an earlier
    index gets 1 towards a later one and the later one gets 0 back.
    """
    eps = tuple(int(e) for e in base_eps)
    K = sorted(set(K))
    if not K:
        raise ValueError("K must be nonempty")
    order = sorted(K, key=lambda i: (eps[i], i))
    rank = {i: r for r, i in enumerate(order)}
    out = {}
    for i in K:
        row = list(eps)
        for j in K:
            if j != i:
                row[j] = 1 if rank[i] < rank[j] else 0
        out[i] = tuple(row)
    check_epsilon_conditions(eps, K, out)
    return out


def check_epsilon_conditions(eps: Sequence[int], K: Sequence[int], rows: dict) -> None:
    """Raise :class:`InternalConsistencyError` unless all five partition conditions hold."""
    p = len(eps)
    Kset = set(K)
    for i in K:
        for j in range(p):
            if j not in Kset and rows[i][j] != eps[j]:
                raise InternalConsistencyError(f"(i) fails at {i},{j}")
        if rows[i][i] != eps[i]:
            raise InternalConsistencyError(f"(ii) fails at {i}")
        for j in K:
            if j != i and rows[i][j] + rows[j][i] != 1:
                raise InternalConsistencyError(f"(iii) fails at {i},{j}")
            if eps[i] == 1 and rows[i][j] > eps[j]:
                raise InternalConsistencyError(f"(iv) fails at {i},{j}")
    for size in range(1, len(K) + 1):
        for sub in itertools.combinations(K, size):
            if not any(all(rows[i][j] == 1 for j in sub if j != i) for i in sub):
                raise InternalConsistencyError(f"(v) fails for {sub}")


def refine_step(cone: HalfOpenCone) -> list[HalfOpenCone]:
    """One splitting step; returns the cone itself when already unimodular."""
    if cone.is_unimodular:
        return [cone]
    cols = cone.generators
    w = find_w(cols)
    coords = parallelepiped_coords(cols, w)
    K = [i for i, c in enumerate(coords) if c > 0]
    eps = [0 if j in cone.strict else 1 for j in range(cone.p)]
    rows = epsilon_assignment(eps, K)
    children = []
    for i in K:
        new_cols = list(cols)
        new_cols[i] = w
        strict = frozenset(j for j, e in enumerate(rows[i]) if e == 0)
        children.append(HalfOpenCone(cone.apex, tuple(new_cols), strict, cone.sign))
    return children


def unimodular_refine(cone: HalfOpenCone) -> list[HalfOpenCone]:
    """Unimodular cones with the parent's apex and sign whose indicators sum to the parent's."""
    out: list[HalfOpenCone] = []
    stack = [cone]
    while stack:
        c = stack.pop()
        if c.is_unimodular:
            out.append(c)
        else:
            stack.extend(reversed(refine_step(c)))
    return out


def _inverse_int(cone: HalfOpenCone) -> Matrix:
    d = cone.determinant
    return tuple(tuple(a * d for a in row) for row in cone._adj)  # d = +-1


def cone_lattice_points(cone: HalfOpenCone, lo: Sequence[int], hi: Sequence[int]) -> list[Vector]:
    """Integer points of a unimodular cone inside the box ``[lo, hi]``, sorted.

    Points are generated as ``apex + A (l + 1_J)`` with ``l >= 0``; the range
    of ``l`` is read off the images of the box corners.
    """
    if not cone.is_unimodular:
        raise ValueError("cone_lattice_points needs a unimodular cone")
    inv = _inverse_int(cone)
    p = cone.p
    corners = [matvec(inv, [c - a for c, a in zip(corner, cone.apex)]) for corner in itertools.product(*zip(lo, hi))]
    ranges = []
    for i in range(p):
        shift = 1 if i in cone.strict else 0
        lmin = max(0, min(y[i] for y in corners) - shift)
        lmax = max(y[i] for y in corners) - shift
        if lmax < lmin:
            return []
        ranges.append(range(lmin, lmax + 1))
    A = cone.matrix
    pts = []
    for ell in itertools.product(*ranges):
        y = [e + (1 if i in cone.strict else 0) for i, e in enumerate(ell)]
        x = tuple(a + v for a, v in zip(cone.apex, matvec(A, y)))
        if all(l <= xi <= h for xi, l, h in zip(x, lo, hi)):
            pts.append(x)
    pts.sort()
    return pts


def indicator_sum(cones: Sequence[HalfOpenCone], x: Sequence) -> int:
    """``sum sign * [x in cone]``."""
    X, q = _scaled(x)
    return sum(c.sign for c in cones if _contains_scaled(c, X, q))
