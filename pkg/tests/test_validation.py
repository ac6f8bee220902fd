import math

import numpy as np
import pytest

from maxstable_sphere.chain import ChainConfig, StationaryParams
from maxstable_sphere.geometry import UnitVec3, uniform_sphere_samples
from maxstable_sphere.rng import RngStream
from maxstable_sphere.validation import (bivariate_cdf_discrepancy, chain_margin_check,
                                         frechet_cdf, ks_frechet, ks_statistic, ks_two_sample,
                                         max_stability_check, rotation_stability_check,
                                         simulate_at_points)

PROBE = np.array([[0.36, 0.48, 0.8]])
EZ = UnitVec3(0.0, 0.0, 1.0)


def test_plugin_quantiles():
    n = 1000
    q = -1.0 / np.log((np.arange(1, n + 1) - 0.5) / n)
    r = ks_frechet(q)
    assert r.statistic <= 0.5 / n + 1e-12 and r.passed


def test_exponential_samples_fail():
    # the sup distance between Exp(1) and standard Frechet CDFs is about 0.27
    r = ks_frechet(RngStream(1).exponential(10_000))
    assert not r.passed and r.statistic > 0.26


def test_ks_input_errors():
    with pytest.raises(ValueError):
        ks_frechet(np.ones(99))
    with pytest.raises(ValueError):
        ks_frechet(np.r_[np.ones(200), 0.0])


def test_frechet_cdf():
    assert frechet_cdf(0.0) == 0.0 and frechet_cdf(-1.0) == 0.0
    assert frechet_cdf(1.0) == pytest.approx(math.exp(-1))
    assert frechet_cdf(2.0, scale=2.0) == pytest.approx(math.exp(-1))


def test_ks_statistic_against_scipy():
    stats = pytest.importorskip("scipy.stats")
    x = RngStream(2).exponential(500) + 0.1
    want = stats.kstest(x, lambda z: frechet_cdf(z)).statistic
    assert ks_statistic(x, frechet_cdf) == pytest.approx(want, rel=1e-12)
    y = RngStream(3).exponential(300)
    assert ks_two_sample(x, y).statistic == pytest.approx(stats.ks_2samp(x, y).statistic,
                                                          rel=1e-12)


def test_two_sample_threshold():
    r = ks_two_sample(np.arange(10_000.0), np.arange(10_000.0))
    assert r.statistic == 0.0 and r.threshold == pytest.approx(0.023, abs=1e-4)


def test_bivariate_discrepancy_identical():
    xy = RngStream(4).random(2000).reshape(-1, 2)
    assert bivariate_cdf_discrepancy(xy, xy, [0.2, 0.5, 0.8]) == 0.0


def test_simulated_margins_pass():
    vals = simulate_at_points(2.0, PROBE, 10_000, RngStream(5))
    assert ks_frechet(vals[:, 0]).passed


def test_max_stability():
    probes = [UnitVec3(0.36, 0.48, 0.8), UnitVec3(1.0, 0.0, 0.0)]
    r = max_stability_check(1.0, 5, probes, 10_000, RngStream(6))
    assert all(k.statistic < 0.023 for k in r.per_probe)
    assert r.bivariate < 0.03 and r.passed
    r1 = max_stability_check(1.0, 1, probes, 2000, RngStream(7))
    assert all(k.passed for k in r1.per_probe)
    with pytest.raises(ValueError):
        max_stability_check(1.0, 2, probes[:1], 100, RngStream(7))


def test_rotation_stability_examples():
    r = rotation_stability_check([EZ], 0.4, EZ, 2.0, grid_n=10_000, mc_n=10_000,
                                 rng=RngStream(8))
    assert r.lhs == pytest.approx(1.0, abs=1e-3) and r.rhs == pytest.approx(1.0, abs=1e-3)
    anti = [UnitVec3(0.0, 0.6, 0.8), UnitVec3(0.0, -0.6, -0.8)]
    r = rotation_stability_check(anti, math.pi / 3, EZ, 2.0, grid_n=10_000, mc_n=50_000,
                                 rng=RngStream(9))
    assert r.rel_err < 1e-3 and r.mc_agrees
    r = rotation_stability_check(uniform_sphere_samples(RngStream(10), 4), 0.0, EZ, 3.0,
                                 grid_n=2000, mc_n=1000, rng=RngStream(10))
    assert abs(r.lhs - r.rhs) <= 1e-15 * r.rhs
    with pytest.raises(ValueError):
        rotation_stability_check(uniform_sphere_samples(RngStream(1), 11), 0.1, EZ, 1.0)


@pytest.mark.parametrize("a", [0.5, 0.99])
def test_chain_margins(a):
    cfg = ChainConfig(a=a, theta=0.3, kappa=1.0)
    r = chain_margin_check(cfg, StationaryParams(), PROBE, 10_000, RngStream(11))
    assert r.passed


def test_misscaled_chain_fails():
    cfg = ChainConfig(a=0.5, kappa=1.0)
    r = chain_margin_check(cfg, None, PROBE, 10_000, RngStream(12), scale=2.0)
    assert not r.passed and r.statistic > 0.15
