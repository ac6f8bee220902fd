import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxstable_sphere.chain import ChainConfig, ConstantField, VmfMixtureField
from maxstable_sphere.ergodicity import (DriftParams, convergence_rate, drift_check,
                                         empirical_coupling_prob, lyapunov,
                                         minorization_alpha, minorization_check,
                                         pl_closed_form, pl_monte_carlo)
from maxstable_sphere.geometry import UnitVec3, VmfParams
from maxstable_sphere.rng import RngStream
from maxstable_sphere.spectral import InnovationField

PROBE = np.array([[0.36, 0.48, 0.8]])


def test_lyapunov_examples():
    assert lyapunov(ConstantField(1.0), 0.3) == 1.0
    assert lyapunov(ConstantField(4.0), 0.5) == 2.0
    z = InnovationField([2.0], [[0.0, 0.0, 1.0]], 2.0)
    assert lyapunov(z, 0.5) == pytest.approx(0.80529, abs=1e-5)
    with pytest.raises(ValueError):
        lyapunov(ConstantField(1.0), 1.0)


def test_closed_form_examples():
    assert pl_closed_form(0.0, 0.5, 0.5, 1.0) == pytest.approx(1.25331, abs=5e-6)
    assert pl_closed_form(0.0, 0.5, 0.5, 1.0) == pytest.approx(
        DriftParams.derive(0.5, 0.5, 1.0).bigK, rel=1e-15)
    big = pl_closed_form(1e6, 0.5, 0.5, 1.0)
    assert big / (0.5 ** 0.5 * 1e6) == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError):
        pl_closed_form(1.0, 1.2, 0.5, 1.0)


@pytest.mark.parametrize("L", [0.0, 0.3, 1.0, 7.0, 80.0])
@pytest.mark.parametrize("gamma", [0.25, 0.5, 0.7])
@pytest.mark.parametrize("a,sigma", [(0.5, 1.0), (0.9, 4.0 * math.pi), (0.2, 0.3)])
def test_closed_form_vs_quadrature(L, gamma, a, sigma):
    # E max(c, ((1-a) Z)^gamma) with Z ~ Frechet(sigma): t = sigma / Z ~ Exp(1),
    # and t = v^10 removes the t^(-gamma) singularity at the origin
    c = a ** gamma * L
    m = (1 - a) * sigma
    g = lambda v: max(c, (m / v ** 10) ** gamma) * mpmath.exp(-v ** 10) * 10 * v ** 9  # noqa: E731
    pts = [0, 1, mpmath.inf]
    if c > 0:
        pts.insert(1, (m * c ** (-1 / gamma)) ** 0.1)
    want = float(mpmath.quad(g, sorted(pts)))
    assert pl_closed_form(L, gamma, a, sigma) == pytest.approx(want, rel=1e-8)


def test_mc_with_stub_sups():
    cfg = ChainConfig(a=0.5)
    est, se = pl_monte_carlo(ConstantField(1.0), cfg, 0.5, 1000, innovation_sups=1.0)
    assert est == pytest.approx(0.70711, abs=5e-6) and se < 1e-15


def test_drift_check_passes():
    cfg = ChainConfig(a=0.9, kappa=1.0)
    r = drift_check(ConstantField(1.0), cfg, 0.5, 100_000, RngStream(1))
    assert r.passed
    assert r.pl_mc <= r.rhs + 3 * r.mc_stderr
    assert drift_check(ConstantField(1.0), ChainConfig(a=0.25), 0.5, 1000,
                       RngStream(1)).beta == pytest.approx(0.5)


def test_alpha_examples():
    assert minorization_alpha(1.0, 0.5, 0.0) == pytest.approx(0.63212, abs=5e-6)
    assert minorization_alpha(1.0, 0.5, 1e-12) == pytest.approx(1 - math.exp(-1), rel=1e-10)
    assert minorization_alpha(1e12, 0.5, 1.0) < 1e-10
    with pytest.raises(ValueError):
        minorization_alpha(0.0, 0.5, 1.0)


@given(st.floats(0.01, 100.0), st.floats(1.01, 10.0), st.floats(0.05, 0.95),
       st.floats(0.0, 10.0))
def test_alpha_in_unit_interval_and_decreasing(R, factor, a, kappa):
    # mathematically in (0, 1); rounds to 1.0 once the exponent exceeds ~37
    lo, hi = minorization_alpha(R * factor, a, kappa), minorization_alpha(R, a, kappa)
    assert 0.0 < lo <= hi <= 1.0


def test_coupling_certain_for_tiny_a():
    cfg = ChainConfig(a=1e-6, kappa=1.0)
    p, se = empirical_coupling_prob(ConstantField(1.0), ConstantField(0.5), cfg, 2000,
                                    RngStream(2))
    assert p >= 1.0 - 3 * se - 1e-3


def test_minorization_check():
    cfg = ChainConfig(a=0.5, kappa=1.0)
    h2 = VmfMixtureField(((0.5 / 0.5 * 0.5, VmfParams(UnitVec3(1.0, 0.0, 0.0), 3.0)),))
    r = minorization_check(ConstantField(1.0), h2, cfg, 1.0, 10_000, RngStream(3))
    assert r.passed and r.coupled_exactly and r.n_verified > 0


def test_convergence_from_stationarity_is_flat():
    cfg = ChainConfig(a=0.5, kappa=1.0)
    r = convergence_rate(cfg, "stationary", PROBE, 5, 10_000, RngStream(4))
    assert np.all(r.distances < 0.0163)
    assert r.fitted_log_slope == -math.inf and r.passed


def test_convergence_errors():
    cfg = ChainConfig(a=0.5, kappa=1.0)
    with pytest.raises(ValueError):
        convergence_rate(cfg, "bogus", PROBE, 5, 1000, RngStream(5))
    with pytest.raises(ValueError):
        convergence_rate(cfg, 1.0, PROBE, 5, 10, RngStream(5))
