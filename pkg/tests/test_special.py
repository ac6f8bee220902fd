import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from maxstable_sphere.special import (gamma, log_gamma, lower_incomplete_gamma,
                                      regularized_lower_gamma)


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.5, 7.0, 30.0, 150.0])
def test_gamma_matches_math(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)
    assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-13, abs=1e-14)


def test_gamma_half():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_domain_errors():
    with pytest.raises(ValueError):
        gamma(0.0)
    with pytest.raises(ValueError):
        log_gamma(-1.0)
    with pytest.raises(ValueError):
        regularized_lower_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        regularized_lower_gamma(0.5, -1.0)


def test_edges():
    assert regularized_lower_gamma(0.5, 0.0) == 0.0
    assert regularized_lower_gamma(0.5, math.inf) == 1.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1e-8, 1e30))
def test_lower_incomplete_gamma_vs_mpmath(s, x):
    want = float(mpmath.gammainc(s, 0, x))
    assert lower_incomplete_gamma(s, x) == pytest.approx(want, rel=1e-12)
