from __future__ import annotations

import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import brute_sum, random_polynomial
from intsum.altsum import (
    DEFAULT_FORM,
    FORMS,
    SizeError,
    build_plan,
    em_sum_1d,
    evaluate_alt,
    exact_sum,
    remainder_direct,
)
from intsum.boxcalc import BoxDomain, CapabilityError, FieldSpec

half = Fraction(1, 2)

square = FieldSpec(1, lambda x: x**2, lambda x: x**3 / 3)
exp1 = FieldSpec(1, np.exp, np.exp, lambda a: np.exp)
exp2 = FieldSpec(2, lambda x, y: np.exp(x + y), lambda x, y: np.exp(x + y), lambda a: (lambda x, y: np.exp(x + y)))


def test_plan_m1_single_term():
    for form in FORMS:
        plan = build_plan(1, (4, 2), form)
        assert len(plan) == 1
        assert plan.terms[0].weight == 1
        assert plan.terms[0].box == BoxDomain((-half, -half), (Fraction(7, 2), Fraction(3, 2)))


def test_plan_tau_symmetric_left_example():
    plan = build_plan(2, (3,), "tau-symmetric-left")
    got = sorted((t.box.lower, t.box.upper, t.weight) for t in plan.terms)
    assert got == [
        ((-1,), (3,), Fraction(-1, 6)),
        ((-half,), (Fraction(5, 2),), Fraction(4, 3)),
        ((0,), (2,), Fraction(-1, 6)),
    ]


def test_plan_empty_and_errors():
    assert len(build_plan(2, (0, 4))) == 0
    with pytest.raises(ValueError):
        build_plan(2, (3,), "nope")
    with pytest.raises(ValueError):
        build_plan(2, (-1,))
    with pytest.raises(ValueError):
        evaluate_alt(square, 2, (3, 3))


@pytest.mark.parametrize("form", FORMS)
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_plan_invariants(form, m):
    n = (m + 2, m + 1)
    plan = build_plan(m, n, form)
    assert plan.weight_sum() == 1
    if form.startswith("tau"):
        assert len(plan) == (2 * m - 1) ** 2
    else:
        assert len(plan) == sum(range(1, m + 1)) ** 2
    for t in plan.terms:
        if form.endswith("right"):
            assert all(u - l == nr for l, u, nr in zip(t.box.lower, t.box.upper, n))
        else:
            assert all(l + u == nr - 1 for l, u, nr in zip(t.box.lower, t.box.upper, n))


def test_square_example_all_forms():
    for form in FORMS:
        assert evaluate_alt(square, 2, (3,), form, exact=True).approximation == 5
        assert evaluate_alt(square, 2, (3,), form, force_quad=True).approximation == pytest.approx(5, abs=1e-10)


def test_cubic_2d_example():
    f = FieldSpec(2, lambda x, y: x**2 * y + y**3, lambda x, y: x**3 * y**2 / 6 + x * y**4 / 4)
    res = evaluate_alt(f, 2, (5, 4), exact=True, with_exact_sum=True)
    assert res.approximation == res.exact_sum == brute_sum(f.f, (5, 4))
    assert res.residual == 0


def test_constant_example():
    one = FieldSpec(2, lambda x, y: 1 + 0 * x, lambda x, y: x * y)
    assert evaluate_alt(one, 3, (2, 2), exact=True).approximation == 4


def test_exact_sum_examples():
    assert exact_sum(FieldSpec(1, lambda x: x), (5,)) == 10
    assert exact_sum(FieldSpec(2, lambda x, y: 1 + 0 * x), (3, 4)) == 12
    assert exact_sum(FieldSpec(2, lambda x, y: x * y), (3, 3), exact=True) == 9
    with pytest.raises(SizeError):
        exact_sum(FieldSpec(1, lambda x: x), (100,), cap=10)


def test_empty_dimension():
    f = FieldSpec(2, lambda x, y: x + y, lambda x, y: x * y * (x + y) / 2)
    res = evaluate_alt(f, 2, (0, 5), with_exact_sum=True)
    assert res.approximation == 0 and res.exact_sum == 0


def test_exact_needs_antiderivative():
    with pytest.raises(CapabilityError):
        evaluate_alt(FieldSpec(1, lambda x: x), 2, (3,), exact=True)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3))
def test_polynomial_exactness(seed, p, m):
    rng = random.Random(seed)
    poly = random_polynomial(rng, p, 2 * m - 1)
    n = tuple(rng.randint(1, 6) for _ in range(p))
    form = rng.choice(FORMS)
    got = evaluate_alt(poly.field(), m, n, form, exact=True).approximation
    assert got == brute_sum(poly, n)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.sampled_from([0.3, 0.7, 1.1]), st.data())
def test_six_forms_agree(m, p, a, data):
    n = tuple(data.draw(st.integers(1, 4)) for _ in range(p))
    f = FieldSpec(p, lambda *x: np.cos(a * sum(x)))
    vals = [evaluate_alt(f, m, n, form).approximation for form in FORMS]
    assert max(vals) - min(vals) < 1e-9


def test_default_form():
    assert DEFAULT_FORM == "tau-grouped-right"


@pytest.mark.parametrize("m,n,f", [(1, (2,), exp1), (2, (3,), exp1), (1, (2, 2), exp2), (2, (3, 3), exp2)])
def test_remainder_identity(m, n, f):
    res = evaluate_alt(f, m, n, with_exact_sum=True)
    assert res.approximation - res.exact_sum == pytest.approx(remainder_direct(f, m, n), abs=1e-8)


def test_remainder_vanishes_for_polynomials():
    rng = random.Random(3)
    for p, m in [(1, 2), (2, 2), (2, 3)]:
        poly = random_polynomial(rng, p, 2 * m - 1)
        assert abs(remainder_direct(poly.field(), m, (3,) * p)) < 1e-10


def test_remainder_guards():
    with pytest.raises(CapabilityError):
        remainder_direct(FieldSpec(1, np.exp), 1, (2,))
    with pytest.raises(ValueError):
        remainder_direct(exp1, 4, (2,))


def test_em_examples():
    lin = FieldSpec(1, lambda x: x, lambda x: x**2 / 2, lambda a: (lambda x: 1.0 + 0 * x))
    assert em_sum_1d(lin, 1, 5) == pytest.approx(10, abs=1e-12)
    one = FieldSpec(1, lambda x: 1.0 + 0 * x, lambda x: x, lambda a: (lambda x: 0.0 * x))
    for m in (1, 2, 3):
        assert em_sum_1d(one, m, 4) == pytest.approx(4, abs=1e-12)
    cube = FieldSpec(1, lambda x: x**3, lambda x: x**4 / 4, lambda a: {1: lambda x: 3 * x**2, 2: lambda x: 6 * x}[a[0]])
    assert em_sum_1d(cube, 2, 3) == pytest.approx(9, abs=1e-12)
    with pytest.raises(CapabilityError):
        em_sum_1d(exp2, 1, 3)


def test_threads_do_not_change_result():
    f = FieldSpec(2, lambda x, y: np.exp(-x * y / 7))
    a = evaluate_alt(f, 3, (4, 4), threads=1).approximation
    b = evaluate_alt(f, 3, (4, 4), threads=4).approximation
    assert a == b


def test_exp_error_decreases_with_m():
    errs = [abs(float(evaluate_alt(exp1, m, (6,), with_exact_sum=True).residual)) for m in (1, 2, 3, 4)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert math.isfinite(errs[-1])
