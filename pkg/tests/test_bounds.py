from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import brentq

from intsum.altsum import evaluate_alt
from intsum.bounds import (
    InvalidFlagError,
    bound_coarse,
    bound_report,
    bound_tight,
    heuristic_m2m,
    kappa,
    lambda_fn,
    lambda_star,
)
from intsum.boxcalc import FieldSpec
from intsum.coefficients import gamma_table

# Frozen from an independent oracle: root of d/dt log Lambda = log((1-t)/(1+t)) + 2/t
# solved by Brent's method, then Lambda evaluated directly.
T_STAR = 0.8335565596009646
LAMBDA_STAR = 0.30812021193851274
KAPPA = 0.27754288494686402
COARSE_M1_P1 = 0.041667858478257887
COARSE_M2_P2_STRICT = 0.19956436


def test_oracle_reproduces_frozen_constants():
    t = brentq(lambda t: math.log((1 - t) / (1 + t)) + 2 / t, 0.5, 0.99, xtol=1e-15)
    lam = (1 - t) ** (t - 1) * (1 + t) ** (-1 - t) * t * t
    assert t == pytest.approx(T_STAR, abs=1e-12)
    assert lam == pytest.approx(LAMBDA_STAR, abs=1e-14)


def test_lambda_star_and_kappa():
    t, lam = lambda_star()
    assert t == pytest.approx(T_STAR, abs=1e-6)
    assert lam == pytest.approx(LAMBDA_STAR, abs=1e-12)
    assert lam == pytest.approx(0.3081, abs=5e-5)
    assert kappa() == pytest.approx(0.27754, abs=5e-6)
    assert kappa() == pytest.approx(KAPPA, abs=1e-12)


def test_lambda_at_half():
    assert lambda_fn(0.5) == pytest.approx(0.5**-0.5 * 1.5**-1.5 / 4, rel=1e-14)
    assert lambda_fn(0.5) == pytest.approx(0.19245, abs=1e-5)


def test_tight_examples():
    assert bound_tight(gamma_table(1), 1, 1) == Fraction(1, 24)
    assert bound_tight(gamma_table(2), 1, 1) == Fraction(1, 288)
    assert bound_tight(gamma_table(3), 2, 0) == 0
    assert isinstance(bound_tight(gamma_table(2), 1, 2.5), float)


def test_coarse_examples():
    assert bound_coarse(1, 1, 1) == pytest.approx(COARSE_M1_P1, rel=1e-12)
    assert bound_coarse(1, 1, 1) == pytest.approx(1.0331 * math.pi / 6 * KAPPA**2, rel=1e-12)
    assert bound_coarse(2, 2, 1, strict_m_ge_2=True) == pytest.approx(COARSE_M2_P2_STRICT, rel=1e-7)
    assert bound_coarse(3, 2, 0) == 0
    with pytest.raises(InvalidFlagError):
        bound_coarse(1, 1, 1, strict_m_ge_2=True)
    with pytest.raises(ValueError):
        bound_coarse(1, 1, -1)


@pytest.mark.parametrize("m", range(1, 7))
@pytest.mark.parametrize("p", range(1, 5))
def test_tight_below_coarse(m, p):
    assert float(bound_tight(gamma_table(m), p, 1)) <= bound_coarse(m, p, 1)
    if m >= 2:
        assert float(bound_tight(gamma_table(m), p, 1)) <= bound_coarse(m, p, 1, strict_m_ge_2=True)


def _sin_field(p):
    return FieldSpec(p, lambda *x: np.sin(sum(x)), lambda *x: np.sin(sum(x) - p * np.pi / 2))


@pytest.mark.parametrize("p,n", [(1, (7,)), (1, (40,)), (2, (4, 5)), (3, (3, 2, 3))])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_error_within_bounds_for_sine(p, n, m):
    f = _sin_field(p)
    res = evaluate_alt(f, m, n, with_exact_sum=True)
    M = math.prod(n)  # |f^(alpha)| <= 1 at every lattice point
    tight = float(bound_tight(gamma_table(m), p, M))
    assert abs(res.residual) <= tight <= bound_coarse(m, p, M)


def test_report_and_heuristic():
    r = bound_report(2, 1, 3.0)
    assert r.tight_bound == pytest.approx(3 / 288)
    assert r.coarse_bound == bound_coarse(2, 1, 3.0)
    f = FieldSpec(1, np.sin, derivative=lambda a: (lambda x: np.sin(x + a[0] * np.pi / 2)))
    h = heuristic_m2m(f, 2, (10,))
    assert 0 < h <= 10
