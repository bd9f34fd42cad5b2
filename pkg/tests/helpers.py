"""Shared oracles for the test-suite."""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

from intsum.boxcalc import FieldSpec


def _pow(x, k):
    return x**k if k else 1


class Polynomial:
    """Sparse polynomial ``sum c_e x^e`` with exact antiderivative and derivatives."""

    def __init__(self, terms: dict[tuple[int, ...], int], p: int):
        self.terms = {e: c for e, c in terms.items() if c}
        self.p = p

    def __call__(self, *x):
        return sum(
            (c * math.prod(_pow(x[r], e[r]) for r in range(self.p)) for e, c in self.terms.items()),
            0,
        )

    def antiderivative(self, *x):
        total = 0
        for e, c in self.terms.items():
            total = total + Fraction(c, math.prod(k + 1 for k in e)) * math.prod(x[r] ** (e[r] + 1) for r in range(self.p))
        return total

    def float_antiderivative(self, *x):
        total = 0.0
        for e, c in self.terms.items():
            total = total + c / math.prod(k + 1 for k in e) * math.prod(x[r] ** (e[r] + 1) for r in range(self.p))
        return total

    def derivative(self, alpha):
        out = {}
        for e, c in self.terms.items():
            if all(k >= a for k, a in zip(e, alpha)):
                coeff = c * math.prod(math.perm(k, a) for k, a in zip(e, alpha))
                out[tuple(k - a for k, a in zip(e, alpha))] = coeff
        return Polynomial(out, self.p)

    def field(self, exact_F: bool = True) -> FieldSpec:
        F = self.antiderivative if exact_F else self.float_antiderivative
        return FieldSpec(self.p, self, F, lambda a: _broadcasting(self.derivative(a)))


def _broadcasting(poly: Polynomial):
    # zero / constant polynomials must still broadcast against arrays
    def g(*x):
        return poly(*x) + 0 * sum(x)

    return g


def random_polynomial(rng: random.Random, p: int, degree: int, n_terms: int = 4) -> Polynomial:
    monomials = [e for e in itertools.product(range(degree + 1), repeat=p) if sum(e) <= degree]
    terms = {}
    for e in rng.sample(monomials, min(n_terms, len(monomials))):
        terms[e] = rng.randint(-5, 5)
    return Polynomial(terms, p)


def brute_sum(func, n):
    return sum(func(*(Fraction(k) for k in idx)) for idx in itertools.product(*(range(x) for x in n)))
