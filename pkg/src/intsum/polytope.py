"""Simple lattice polytopes: signed vertex-cone decompositions and sums.

The indicator of a simple full-dimensional lattice polytope is written as a
signed sum of half-open vertex cones (Lawrence-Varchenko): at each vertex the
edge directions that point against a generic direction ``xi`` are flipped,
the flipped coordinates become strict, and the cone gets sign
``(-1)^(number of flips)``. Each cone is then refined into unimodular ones.
All geometry is exact integer/rational arithmetic.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Optional, Sequence

import numpy as np

from .altsum import SizeError, default_threads
from .boxcalc import DEFAULT_QUAD, BoxDomain, CapabilityError, FieldSpec, QuadratureConfig, integrate_quad
from .coefficients import gamma_table, tau_of
from .conedecomp import (
    HalfOpenCone,
    cone_contains,
    cone_lattice_points,
    det,
    indicator_sum,
    matvec,
    unimodular_refine,
)


class DimensionError(ValueError):
    """Input is not full-dimensional."""


class UnsupportedPolytopeError(ValueError):
    """Only simple polytopes are handled; non-simple ones need Haase's
    triangulated-normal-cone construction, which is not implemented."""


class ConvexPositionError(ValueError):
    pass


class GenericityError(RuntimeError):
    pass


Vector = tuple[int, ...]


@dataclass(frozen=True)
class Facet:
    normal: Vector
    offset: int
    vertices: frozenset[int]


def _rank(vectors: Sequence[Sequence[int]]) -> int:
    rows = [[Fraction(x) for x in v] for v in vectors]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][c] != 0:
                f = rows[r][c] / rows[rank][c]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def _normal(diffs: Sequence[Sequence[int]]) -> Vector:
    """Integer vector orthogonal to ``p-1`` vectors in Z^p (generalized cross product)."""
    p = len(diffs) + 1
    out = []
    for i in range(p):
        minor = [[d[c] for c in range(p) if c != i] for d in diffs]
        out.append((-1) ** i * det(minor))
    return tuple(out)


def _primitive(v: Sequence[int]) -> Vector:
    g = reduce(math.gcd, (abs(x) for x in v), 0)
    return tuple(x // g for x in v)


def compute_facets(points: Sequence[Vector]) -> list[Facet]:
    """Facets ``normal . x <= offset`` of the hull of full-dimensional points.

    Brute force over all p-subsets of the points, so the cost grows like
    ``C(len(points), p)``; meant for polytopes with few vertices.
    """
    p = len(points[0])
    seen = {}
    for combo in itertools.combinations(range(len(points)), p):
        base = points[combo[0]]
        diffs = [tuple(a - b for a, b in zip(points[i], base)) for i in combo[1:]]
        nrm = _primitive(_normal(diffs)) if p > 1 else (1,)
        if not any(nrm):
            continue
        off = sum(a * b for a, b in zip(nrm, base))
        vals = [sum(a * b for a, b in zip(nrm, q)) - off for q in points]
        if all(v <= 0 for v in vals):
            pass
        elif all(v >= 0 for v in vals):
            nrm = tuple(-a for a in nrm)
            off = -off
        else:
            continue
        if nrm not in seen:
            on = frozenset(i for i, q in enumerate(points) if sum(a * b for a, b in zip(nrm, q)) == off)
            seen[nrm] = Facet(nrm, off, on)
    return sorted(seen.values(), key=lambda f: f.normal)


@dataclass(frozen=True)
class LatticePolytope:
    vertices: tuple[Vector, ...]
    adjacency: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self):
        verts = tuple(tuple(int(x) for x in v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if not verts:
            raise DimensionError("no vertices")
        if any(len(v) != len(verts[0]) for v in verts):
            raise DimensionError("vertices of mixed dimension")
        if len(set(verts)) != len(verts):
            raise ValueError("duplicate vertices")
        if self.adjacency is not None:
            object.__setattr__(self, "adjacency", tuple(tuple(sorted(int(i) for i in a)) for a in self.adjacency))

    @property
    def p(self) -> int:
        return len(self.vertices[0])

    @classmethod
    def from_dict(cls, data: dict) -> "LatticePolytope":
        verts = data["vertices"]
        if "dim" in data and any(len(v) != data["dim"] for v in verts):
            raise DimensionError("vertex length disagrees with 'dim'")
        return cls(tuple(map(tuple, verts)), data.get("adjacency"))

    @classmethod
    def from_json(cls, path: str) -> "LatticePolytope":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = {"dim": self.p, "vertices": [list(v) for v in self.vertices]}
        if self.adjacency is not None:
            out["adjacency"] = [list(a) for a in self.adjacency]
        return out

    @cached_property
    def facets(self) -> list[Facet]:
        if len(self.vertices) <= self.p or _rank(
            [tuple(a - b for a, b in zip(v, self.vertices[0])) for v in self.vertices[1:]]
        ) < self.p:
            raise DimensionError(f"polytope is not full-dimensional in R^{self.p}")
        return compute_facets(self.vertices)

    def contains(self, x: Sequence) -> bool:
        return all(sum(Fraction(a) * xi for a, xi in zip(f.normal, x)) <= f.offset for f in self.facets)

    def bounding_box(self) -> tuple[Vector, Vector]:
        lo = tuple(min(c) for c in zip(*self.vertices))
        hi = tuple(max(c) for c in zip(*self.vertices))
        return lo, hi


def resolve_adjacency(P: LatticePolytope) -> LatticePolytope:
    """Fill in (or validate) vertex adjacency and require simplicity.

    ``[u, v]`` is an edge iff the intersection of all facets through both
    points contains no other vertex.
    """
    facets = P.facets
    nv = len(P.vertices)
    everything = frozenset(range(nv))

    def smallest_face(idx: Sequence[int]) -> frozenset[int]:
        face = everything
        for f in facets:
            if all(i in f.vertices for i in idx):
                face = face & f.vertices
        return face

    for i in range(nv):
        if smallest_face([i]) != {i}:
            raise ConvexPositionError(f"point {P.vertices[i]} is not a vertex of the hull")
    if P.adjacency is None:
        adj = [[] for _ in range(nv)]
        for i, j in itertools.combinations(range(nv), 2):
            if smallest_face([i, j]) == {i, j}:
                adj[i].append(j)
                adj[j].append(i)
        adjacency = tuple(tuple(a) for a in adj)
    else:
        adjacency = P.adjacency
        if len(adjacency) != nv:
            raise ValueError("adjacency list length differs from vertex count")
    for i, nb in enumerate(adjacency):
        if len(nb) != P.p:
            raise UnsupportedPolytopeError(
                f"vertex {P.vertices[i]} has {len(nb)} edges; only simple polytopes "
                f"({P.p} edges per vertex) are supported"
            )
    return LatticePolytope(P.vertices, adjacency)


@dataclass(frozen=True)
class SignedDecomposition:
    polytope: LatticePolytope
    xi: Vector
    cones: tuple[HalfOpenCone, ...]
    vertex_cones: tuple[HalfOpenCone, ...]

    def indicator(self, x: Sequence) -> int:
        return indicator_sum(self.cones, x)


def edge_directions(P: LatticePolytope) -> list[list[Vector]]:
    P = P if P.adjacency is not None else resolve_adjacency(P)
    return [
        [_primitive(tuple(a - b for a, b in zip(P.vertices[j], v))) for j in P.adjacency[i]]
        for i, v in enumerate(P.vertices)
    ]


def default_xi(P: LatticePolytope) -> Vector:
    # base-M digits make <xi, d> nonzero for every nonzero d with |d_r| < M/2
    dirs = [d for ds in edge_directions(P) for d in ds]
    M = 2 * max(abs(x) for d in dirs for x in d) + 1
    return tuple(M**r for r in range(P.p))


def _is_generic(xi: Sequence[int], dirs) -> bool:
    return all(sum(a * b for a, b in zip(xi, d)) != 0 for ds in dirs for d in ds)


def vertex_cones(
    P: LatticePolytope, xi: Optional[Sequence[int]] = None, seed: int = 0, retries: int = 100
) -> SignedDecomposition:
    """Signed half-open unimodular cones whose indicators sum to that of ``P``."""
    P = resolve_adjacency(P)
    dirs = edge_directions(P)
    if xi is None:
        xi = default_xi(P)
    xi = tuple(int(x) for x in xi)
    rng = random.Random(seed)
    bound = 10
    tries = 0
    while not _is_generic(xi, dirs):
        tries += 1
        if tries > retries:
            raise GenericityError("could not find a generic direction")
        xi = tuple(rng.randint(-bound, bound) for _ in range(P.p))
        bound *= 2
    raw = []
    for v, ds in zip(P.vertices, dirs):
        gens, strict = [], set()
        for i, d in enumerate(ds):
            if sum(a * b for a, b in zip(xi, d)) < 0:
                gens.append(tuple(-x for x in d))
                strict.add(i)
            else:
                gens.append(d)
        raw.append(HalfOpenCone(v, tuple(gens), frozenset(strict), (-1) ** len(strict)))
    refined = tuple(c for cone in raw for c in unimodular_refine(cone))
    return SignedDecomposition(P, xi, refined, tuple(raw))


def count_lattice_points(P: LatticePolytope, decomposition: Optional[SignedDecomposition] = None) -> int:
    """``#(P cap Z^p)`` from signed cone counts clipped to the bounding box."""
    dec = decomposition or vertex_cones(P)
    lo, hi = dec.polytope.bounding_box()
    return sum(c.sign * len(cone_lattice_points(c, lo, hi)) for c in dec.cones)


def lattice_points(P: LatticePolytope, cap: int = 10**7) -> list[Vector]:
    """Brute-force ``P cap Z^p`` in lexicographic order."""
    facets = P.facets
    lo, hi = P.bounding_box()
    size = math.prod(h - l + 1 for l, h in zip(lo, hi))
    if size > cap:
        raise SizeError(f"bounding box has {size} points, cap is {cap}")
    return [
        x
        for x in itertools.product(*(range(l, h + 1) for l, h in zip(lo, hi)))
        if all(sum(a * b for a, b in zip(f.normal, x)) <= f.offset for f in facets)
    ]


def exact_polytope_sum(P: LatticePolytope, f: FieldSpec, exact: bool = False, cap: int = 10**7):
    """``sum f(k)`` over the lattice points of ``P``, in lexicographic order."""
    pts = lattice_points(P, cap)
    if exact:
        return sum((f.f(*(Fraction(c) for c in k)) for k in pts), Fraction(0))
    if not pts:
        return 0.0
    cols = np.array(pts, dtype=float).T
    vals = np.broadcast_to(np.asarray(f.f(*cols), dtype=float), (len(pts),))
    return float(vals.sum())


def _box_image(cone: HalfOpenCone, lo: Sequence, hi: Sequence):
    """Bounding box, in cone coordinates, of the preimage of ``[lo, hi]``."""
    inv = [[a * cone.determinant for a in row] for row in cone._adj]
    corners = [
        matvec(inv, [Fraction(c) - a for c, a in zip(corner, cone.apex)])
        for corner in itertools.product(*zip(lo, hi))
    ]
    return [min(y[i] for y in corners) for i in range(cone.p)], [max(y[i] for y in corners) for i in range(cone.p)]


def _pullback(f, cone: HalfOpenCone):
    A = np.array(cone.matrix, dtype=float)
    v = np.array(cone.apex, dtype=float)

    def g(*z):
        xs = [v[r] + sum(A[r, c] * z[c] for c in range(len(z))) for r in range(len(z))]
        return f(*xs)

    return g


def polytope_alt_terms(
    decomposition: SignedDecomposition, m: int, support: tuple[Sequence, Sequence]
):
    """``(weight, cone, z-box)`` triples for the polytope approximation.

    Each half-infinite shifted cone integral is written in cone coordinates
    ``x = apex + A z`` over ``z >= 1_J - (1 + beta)/2`` and truncated to the
    preimage of the support box. Empty boxes are dropped.
    """
    table = gamma_table(m)
    lo, hi = support
    p = decomposition.polytope.p
    half = Fraction(1, 2)
    terms = []
    images = [_box_image(c, lo, hi) for c in decomposition.cones]
    for beta in itertools.product(range(1 - m, m), repeat=p):
        w = tau_of(table, [1 + abs(b) for b in beta])
        for cone, (zlo, zhi) in zip(decomposition.cones, images):
            start = [(1 if i in cone.strict else 0) - half - b * half for i, b in enumerate(beta)]
            box_lo = [max(a, b) for a, b in zip(start, zlo)]
            if any(l >= h for l, h in zip(box_lo, zhi)):
                continue
            terms.append((w * cone.sign, cone, BoxDomain(tuple(box_lo), tuple(zhi))))
    return terms


def polytope_alt_sum(
    P: LatticePolytope,
    f: FieldSpec,
    m: int,
    support: Optional[tuple[Sequence, Sequence]] = None,
    cfg: QuadratureConfig = DEFAULT_QUAD,
    xi: Optional[Sequence[int]] = None,
    threads: int = 1,
    decomposition: Optional[SignedDecomposition] = None,
) -> float:
    """Integral-only approximation of ``sum_{k in P cap Z^p} f(k)`` for compactly supported ``f``.

    ``support = (lo, hi)`` must contain the support of ``f``. Unimodular cones
    make the change of variables volume preserving.
    """
    if support is None:
        raise CapabilityError("polytope_alt_sum needs the support box of f")
    dec = decomposition or vertex_cones(P, xi)
    terms = polytope_alt_terms(dec, m, support)

    def one(term):
        _, cone, box = term
        return integrate_quad(_pullback(f.f, cone), box, cfg)

    if threads > 1 and len(terms) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, terms))
    else:
        values = [one(t) for t in terms]
    total = 0.0
    for (w, _, _), val in zip(terms, values):
        total += float(w) * val
    return total


def perturbed_indicator(
    decomposition: SignedDecomposition, m: int, alpha: Sequence[int], x: Sequence
) -> Fraction:
    """DIAGNOSTIC: ``sum_{|beta| = alpha} sum_cones sign [x in C + A(1_J - (1+beta)/2)]``.

    Evaluated pointwise (exact) so it can be tabulated on a grid; no claim
    is made about its support.
    """
    half = Fraction(1, 2)
    total = 0
    for signs in itertools.product(*([1, -1] if a else [1] for a in alpha)):
        beta = [s * a for s, a in zip(signs, alpha)]
        for c in decomposition.cones:
            shift_coords = [(1 if i in c.strict else 0) - half - b * half for i, b in enumerate(beta)]
            shift = matvec(c.matrix, shift_coords)
            if cone_contains(c, [Fraction(xi) - s for xi, s in zip(x, shift)]):
                total += c.sign
    return total
