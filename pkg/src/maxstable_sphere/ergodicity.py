"""Numerical certification of geometric ergodicity.

Drift: with ``L(h) = sup h^gamma`` the one-step expectation is

    (PL)(h) = E max{a^gamma L(h), (1-a)^gamma sup(Z)^gamma}

and ``sup Z = sigma_Z / E`` with ``E`` standard exponential, which gives a
closed form through the lower incomplete gamma function.  Minorization: if
the top atom of the innovation alone dominates ``a / (1 - a)`` times both
histories, one step sends both chains to the same state.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._checks import check_interval, check_points, check_positive_int
from .chain import (
    ChainConfig,
    ChainState,
    ConstantField,
    _advance,
    _evaluate,
    initial_state,
    run_ensemble,
    state_sup,
    stationary_draws,
)
from .geometry import UnitVec3, fibonacci_grid, vmf_inf, vmf_sup
from .rng import as_stream
from .spectral import InnovationField, simulate_innovations, SPHERE, top_weights
from .special import gamma as gamma_fn
from .special import lower_incomplete_gamma
from .validation import frechet_cdf, ks_statistic

__all__ = [
    "DriftParams",
    "DriftReport",
    "MinorizationReport",
    "ConvergenceReport",
    "lyapunov",
    "field_supremum",
    "pl_closed_form",
    "pl_monte_carlo",
    "drift_check",
    "minorization_alpha",
    "empirical_coupling_prob",
    "minorization_check",
    "convergence_rate",
]


def _check_gamma(gamma):
    return check_interval(gamma, "gamma", 0.0, 1.0, closed_low=False, closed_high=False)


@dataclass(frozen=True)
class DriftParams:
    """``beta = a^gamma`` and ``K = (1-a)^gamma sigma_Z^gamma Gamma(1-gamma)``."""

    gamma: float
    beta: float
    bigK: float

    @classmethod
    def derive(cls, a, gamma, sigma_z):
        gamma = _check_gamma(gamma)
        return cls(gamma, a ** gamma, ((1.0 - a) * sigma_z) ** gamma * gamma_fn(1.0 - gamma))


@dataclass
class DriftReport:
    L_h: float
    pl_closed: float
    pl_mc: float
    mc_stderr: float
    rhs: float
    beta: float
    bigK: float
    n: int
    seed: int
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.pl_mc <= self.rhs + 3.0 * self.mc_stderr
                           and abs(self.pl_mc - self.pl_closed) <= 3.0 * self.mc_stderr)


@dataclass
class MinorizationReport:
    R: float
    alpha_analytic: float
    alpha_empirical: float
    stderr: float
    n: int
    seed: int
    coupled_exactly: bool = True
    n_verified: int = 0
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.alpha_empirical >= self.alpha_analytic - 3.0 * self.stderr
                           and self.coupled_exactly)


@dataclass
class ConvergenceReport:
    probe: UnitVec3
    horizon: int
    distances: np.ndarray
    fitted_log_slope: float
    noise_floor: float
    a: float
    fit_range: tuple = ()
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.fitted_log_slope <= math.log(self.a) + 0.1)


# ---------------------------------------------------------------------------
# drift


def field_supremum(h):
    """Supremum over S^2 of a field with a closed-form sup."""
    if isinstance(h, (int, float)):
        return float(h)
    if isinstance(h, ChainState):
        return state_sup(h)
    return float(h.sup())


def lyapunov(h, gamma):
    """``L(h) = sup_x h(x)^gamma``."""
    return field_supremum(h) ** _check_gamma(gamma)


def pl_closed_form(L_h, gamma, a, sigma_z):
    """Closed form of ``E max{a^gamma L_h, ((1-a) sup Z)^gamma}``.

    With ``c = a^gamma L_h`` and ``m = (1-a) sigma_z`` this is
    ``c exp(-m c^(-1/gamma)) + m^gamma gamma_lower(1-gamma, m c^(-1/gamma))``.
    """
    gamma = _check_gamma(gamma)
    a = check_interval(a, "a", 0.0, 1.0, closed_low=False, closed_high=False)
    if L_h < 0.0:
        raise ValueError("L_h must be non-negative")
    c = a ** gamma * L_h
    m = (1.0 - a) * sigma_z
    if c == 0.0:
        return m ** gamma * gamma_fn(1.0 - gamma)
    cut = m * c ** (-1.0 / gamma)
    return c * math.exp(-cut) + m ** gamma * lower_incomplete_gamma(1.0 - gamma, cut)


def _innovation_sups(config, keys):
    spec = config.innovation
    if spec.kind == "custom":
        return np.array([f.sup() for f in spec.generator.sample_many(keys)])
    # the top weight fixes the supremum; no need to simulate the other atoms
    return top_weights(keys, rate=spec.rate) * vmf_sup(config.kappa)


def pl_monte_carlo(h, config, gamma, n, rng=None, innovation_sups=None, L_h=None):
    """Monte Carlo estimate of ``(PL)(h)`` over ``n`` fresh innovations.

    Returns ``(estimate, stderr)`` with ``stderr = sd / sqrt(n)``.
    ``innovation_sups`` replaces the simulated suprema (for stubs); ``L_h``
    overrides ``lyapunov(h, gamma)``.
    """
    gamma = _check_gamma(gamma)
    n = check_positive_int(n, "n", minimum=100)
    if L_h is None:
        L_h = lyapunov(h, gamma)
    if innovation_sups is None:
        keys = as_stream(rng).spawn_keys("drift", np.arange(n, dtype=np.uint64))
        sups = _innovation_sups(config, keys)
    else:
        sups = np.broadcast_to(np.asarray(innovation_sups, dtype=float), (n,))
    a = config.a
    draws = np.maximum(a ** gamma * L_h, (1.0 - a) ** gamma * sups ** gamma)
    return float(draws.mean()), float(draws.std(ddof=1) / math.sqrt(n))


def drift_check(h, config, gamma, n, rng=None, sigma_z=None):
    """Check ``(PL)(h) <= beta L(h) + K`` against the closed form and MC."""
    rng = as_stream(rng)
    sigma = config.sigma_z if sigma_z is None else sigma_z
    params = DriftParams.derive(config.a, gamma, sigma)
    L_h = lyapunov(h, gamma)
    closed = pl_closed_form(L_h, gamma, config.a, sigma)
    est, se = pl_monte_carlo(h, config, gamma, n, rng, L_h=L_h)
    return DriftReport(L_h, closed, est, se, params.beta * L_h + params.bigK,
                       params.beta, params.bigK, n, rng.master_seed)


# ---------------------------------------------------------------------------
# minorization


def minorization_alpha(R, a, kappa, intensity_rate=4.0 * math.pi):
    """Probability that the top atom dominates every history of sup <= R.

    ``1 - exp(-rate (1-a) f_min / (a R))`` with ``f_min`` the smallest vMF
    density value (the kappa -> 0 limit is handled by ``vmf_inf``).
    """
    R = check_interval(R, "R", 0.0, closed_low=False)
    a = check_interval(a, "a", 0.0, 1.0, closed_low=False, closed_high=False)
    x = intensity_rate * (1.0 - a) * vmf_inf(kappa) / (a * R)
    return -math.expm1(-x)


def _coupling_flags(h1, h2, config, n, rng):
    keys = as_stream(rng).spawn_keys("coupling", np.arange(n, dtype=np.uint64))
    bound = top_weights(keys, rate=config.rate) * vmf_inf(config.kappa)
    level = config.a / (1.0 - config.a) * max(field_supremum(h1), field_supremum(h2))
    return keys, bound >= level


def empirical_coupling_prob(h1, h2, config, n, rng=None):
    """Fraction of innovations whose certified infimum dominates both histories.

    Returns ``(fraction, stderr)``.
    """
    n = check_positive_int(n, "n")
    _, flags = _coupling_flags(h1, h2, config, n, rng)
    p = float(flags.mean())
    return p, math.sqrt(p * (1.0 - p) / n)


def minorization_check(h1, h2, config, R, n, rng=None, eval_set=None, max_verify=200):
    """Compare the empirical one-step coupling rate with the analytic bound
    and verify that flagged innovations really merge the two chains."""
    rng = as_stream(rng)
    keys, flags = _coupling_flags(h1, h2, config, n, rng)
    p = float(flags.mean())
    se = math.sqrt(p * (1.0 - p) / n)
    alpha = minorization_alpha(R, config.a, config.kappa, config.rate)
    pts = check_points(fibonacci_grid(4096) if eval_set is None else eval_set)
    flagged = keys[flags][:max_verify]
    exact = True
    if len(flagged) and config.innovation.kind != "custom":
        s1, s2 = initial_state(h1, config), initial_state(h2, config)
        fields = simulate_innovations(config.kappa, SPHERE, flagged,
                                      intensity_mode=config.innovation.intensity_mode)
        for z in fields:
            x1 = _evaluate(_advance(s1, 1.0, z, True), pts)
            x2 = _evaluate(_advance(s2, 1.0, z, True), pts)
            exact = exact and bool(np.array_equal(x1, x2))
    return MinorizationReport(R, alpha, p, se, n, rng.master_seed, exact, len(flagged))


# ---------------------------------------------------------------------------
# convergence


def _fit_slope(distances, floor):
    """Least-squares slope of log distance over the leading run above ``floor``."""
    above = distances > floor
    run = len(distances) if above.all() else int(np.argmin(above))
    if run < 2:
        return -math.inf, (0, run)
    t = np.arange(run, dtype=float)
    slope = np.polyfit(t, np.log(distances[:run]), 1)[0]
    return float(slope), (0, run)


def convergence_rate(config, h0, probe, horizon, reps, rng=None, sp=None, n_jobs=1):
    """Kolmogorov distance of ``X(t, probe)`` to standard Frechet for t <= horizon.

    ``h0`` is an initial field, a constant, or ``"stationary"`` (one
    independent stationary draw per trajectory).
    """
    horizon = check_positive_int(horizon, "horizon", minimum=5)
    reps = check_positive_int(reps, "reps", minimum=1000)
    rng = as_stream(rng)
    pts = check_points(probe)
    if isinstance(h0, str):
        if h0 != "stationary":
            raise ValueError(f"unknown initial condition {h0!r}")
        states = stationary_draws(config, sp, rng.spawn("start"), reps, n_jobs=n_jobs)
    else:
        start = initial_state(h0, config)
        states = [start] * reps
    _, values = run_ensemble(states, horizon, rng, probes=pts, n_jobs=n_jobs)
    dist = np.array([ks_statistic(values[t, :, 0], frechet_cdf) for t in range(horizon + 1)])
    floor = 1.63 / math.sqrt(reps)
    slope, fit = _fit_slope(dist, floor)
    return ConvergenceReport(UnitVec3.from_array(pts[0]), horizon, dist, slope, floor,
                             config.a, fit)
