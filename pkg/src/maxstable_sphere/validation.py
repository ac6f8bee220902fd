"""Statistical and quadrature checks of the max-stable structure.

All thresholds are asymptotic Kolmogorov-Smirnov critical values at the 1%
level: ``1.63 / sqrt(n)`` for one sample and ``1.63 sqrt((n + m) / (n m))``
for two samples.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._checks import check_interval, check_points, check_positive_int
from .chain import stationary_draws
from .geometry import fibonacci_grid, rodrigues_matrix, uniform_sphere_samples, vmf_density_array
from .rng import as_stream
from .spectral import intensity_rate, simulate_flat

__all__ = [
    "KS_CRITICAL_1PCT",
    "KsResult",
    "MaxStabilityResult",
    "RotationStabilityResult",
    "frechet_cdf",
    "ks_statistic",
    "ks_frechet",
    "ks_two_sample",
    "bivariate_cdf_discrepancy",
    "simulate_at_points",
    "max_stability_check",
    "rotation_stability_check",
    "chain_margin_check",
]

KS_CRITICAL_1PCT = 1.63


def frechet_cdf(z, scale=1.0):
    """CDF ``exp(-scale / z)`` of the Frechet law with the given scale."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(z > 0.0, np.exp(-scale / np.where(z > 0.0, z, 1.0)), 0.0)


@dataclass
class KsResult:
    statistic: float
    n: int
    threshold: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.statistic < self.threshold)


def ks_statistic(samples, cdf):
    """One-sample Kolmogorov distance ``sup |F_n - F|`` for a vectorized ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    f = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_frechet(samples, threshold=None, scale=1.0):
    """KS test of positive samples against the Frechet law ``exp(-scale/z)``."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    n = len(x)
    if n < 100:
        raise ValueError("ks_frechet needs at least 100 samples")
    if np.any(~(x > 0.0)):
        raise ValueError("Frechet samples must be positive")
    stat = ks_statistic(x, lambda z: frechet_cdf(z, scale))
    if threshold is None:
        threshold = KS_CRITICAL_1PCT / math.sqrt(n)
    return KsResult(stat, n, threshold)


def ks_two_sample(x, y, threshold=None):
    x = np.sort(np.asarray(x, dtype=float).reshape(-1))
    y = np.sort(np.asarray(y, dtype=float).reshape(-1))
    n, m = len(x), len(y)
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / n
    fy = np.searchsorted(y, grid, side="right") / m
    stat = float(np.max(np.abs(fx - fy)))
    if threshold is None:
        threshold = KS_CRITICAL_1PCT * math.sqrt((n + m) / (n * m))
    return KsResult(stat, n, threshold)


def bivariate_cdf_discrepancy(xy1, xy2, thresholds):
    """``sup`` over a threshold grid of the difference between two bivariate
    empirical CDFs.  ``xy1``, ``xy2`` have shape (n, 2)."""
    xy1, xy2 = np.asarray(xy1), np.asarray(xy2)
    t = np.asarray(thresholds, dtype=float)
    worst = 0.0
    for s in t:
        for u in t:
            p1 = np.mean((xy1[:, 0] <= s) & (xy1[:, 1] <= u))
            p2 = np.mean((xy2[:, 0] <= s) & (xy2[:, 1] <= u))
            worst = max(worst, abs(p1 - p2))
    return float(worst)


def simulate_at_points(kappa, points, n, rng, tag="probe", intensity_mode="exact"):
    """``n`` independent innovation values at the points, shape (n, len(points)).

    Each innovation is stopped grid-exactly on ``points``, so the values are
    those of the untruncated field.
    """
    pts = check_points(points)
    keys = as_stream(rng).spawn_keys(tag, np.arange(n, dtype=np.uint64))
    w, c, counts = simulate_flat(kappa, pts, keys, rate=intensity_rate(intensity_mode))
    vals = w[:, None] * vmf_density_array(pts, c, kappa)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return np.maximum.reduceat(vals, starts, axis=0)


@dataclass
class MaxStabilityResult:
    per_probe: list
    bivariate: float
    bivariate_threshold: float
    rescaled_margin: list
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(all(r.passed for r in self.per_probe)
                           and all(r.passed for r in self.rescaled_margin)
                           and self.bivariate < self.bivariate_threshold)


def max_stability_check(config, n_copies, probes, reps, rng=None, bivariate_threshold=0.03):
    """Compare ``max_k Z_k / n`` over ``n_copies`` copies with a single ``Z``.

    ``config`` is a chain configuration or a bare concentration ``kappa``.

    Returns per-probe two-sample KS results, the bivariate CDF discrepancy on
    a 10 x 10 grid of Frechet deciles, and one-sample Frechet KS of the
    rescaled maxima.
    """
    n_copies = check_positive_int(n_copies, "n_copies")
    kappa, mode = (float(config), "exact") if np.isscalar(config) else (
        config.kappa, config.innovation.intensity_mode)
    rng = as_stream(rng)
    pts = check_points(probes)
    if len(pts) != 2:
        raise ValueError("max_stability_check expects two probe points")
    single = simulate_at_points(kappa, pts, reps, rng, tag="single", intensity_mode=mode)
    copies = simulate_at_points(kappa, pts, reps * n_copies, rng, tag="copies",
                                intensity_mode=mode)
    rescaled = copies.reshape(reps, n_copies, len(pts)).max(axis=1) / n_copies
    per_probe = [ks_two_sample(rescaled[:, j], single[:, j]) for j in range(len(pts))]
    margins = [ks_frechet(rescaled[:, j]) for j in range(len(pts))]
    levels = (np.arange(10) + 0.5) / 10.0
    thresholds = -1.0 / np.log(levels)
    biv = bivariate_cdf_discrepancy(rescaled, single, thresholds)
    return MaxStabilityResult(per_probe, biv, bivariate_threshold, margins)


@dataclass
class RotationStabilityResult:
    lhs: float
    rhs: float
    rel_err: float
    lhs_mc: float
    rhs_mc: float
    lhs_mc_stderr: float
    rhs_mc_stderr: float

    @property
    def mc_agrees(self):
        return bool(abs(self.lhs - self.lhs_mc) <= 3.0 * self.lhs_mc_stderr
                    and abs(self.rhs - self.rhs_mc) <= 3.0 * self.rhs_mc_stderr)


def rotation_stability_check(points, theta, axis, kappa, grid_n=10_000, mc_n=100_000, rng=None):
    """Both sides of the rotational invariance of ``int max_m f(x_m; mu) dmu``.

    The left side uses the rotated points ``R x_m``.  Each integral is
    computed by Fibonacci quadrature and by Monte Carlo over uniform marks
    (times 4 pi).
    """
    pts = check_points(points)
    if not 1 <= len(pts) <= 10:
        raise ValueError("between 1 and 10 points are supported")
    check_interval(kappa, "kappa", 0.0)
    rot = rodrigues_matrix(theta, axis)
    rotated = rot.apply(pts)
    grid = fibonacci_grid(grid_n)

    def integrand(xs, marks):
        return vmf_density_array(xs, marks, kappa).max(axis=1)

    lhs = grid.integrate(integrand(rotated, grid.nodes))
    rhs = grid.integrate(integrand(pts, grid.nodes))
    rel = abs(lhs - rhs) / abs(rhs)
    marks = uniform_sphere_samples(as_stream(rng).spawn("rotation-mc"), mc_n)
    vl = 4.0 * math.pi * integrand(rotated, marks)
    vr = 4.0 * math.pi * integrand(pts, marks)
    sq = math.sqrt(mc_n)
    return RotationStabilityResult(lhs, rhs, rel, float(vl.mean()), float(vr.mean()),
                                   float(vl.std(ddof=1) / sq), float(vr.std(ddof=1) / sq))


def chain_margin_check(config, sp, probe, reps, rng=None, scale=1.0, n_jobs=1):
    """KS of stationary-draw values at ``probe`` against standard Frechet.

    ``scale`` multiplies the sampled values (a deliberate misfit for tests).
    """
    reps = check_positive_int(reps, "reps", minimum=100)
    pts = check_points(probe)
    states = stationary_draws(config, sp, rng, reps, n_jobs=n_jobs)
    values = np.array([s.evaluate(pts)[0] for s in states])
    return ks_frechet(scale * values)
