"""The end-to-end acceptance suite, one function per criterion.

Every function takes a master ``seed`` (and ``n_jobs`` where replicates are
simulated) and returns a list of :class:`~maxstable_sphere.reporting.Report`.
A criterion passes when all of its reports pass.
"""

import math

import numpy as np

from .chain import (
    ChainConfig,
    ConstantField,
    VmfMixtureField,
    _advance,
    _evaluate,
    coupled_trajectory,
    initial_state,
    run_ensemble,
    stationary_draws,
    StationaryParams,
)
from .ergodicity import convergence_rate, drift_check, minorization_check
from .geometry import UnitVec3, VmfParams, fibonacci_grid, uniform_sphere_samples, vmf_sup
from .reporting import Report
from .rng import RngStream
from .spectral import SPHERE, InnovationField, intensity_rate, simulate_flat, simulate_innovations
from .validation import (
    ks_frechet,
    ks_two_sample,
    rotation_stability_check,
    simulate_at_points,
)

__all__ = ["CRITERIA", "run_criterion", "run_all", "drift_fields"]

PROBE = np.array([[0.36, 0.48, 0.8]])


def margins(seed=1, n_jobs=1, reps=10_000):
    """Frechet margins of Z at a probe for kappa in {0, 1, 2}."""
    out = []
    for kappa in (0.0, 1.0, 2.0):
        vals = simulate_at_points(kappa, PROBE, reps, RngStream(seed), tag="margins")[:, 0]
        out.append(Report.from_ks("margins", ks_frechet(vals), {"kappa": kappa}, seed))
    return out


def sup_law(seed=2, n_jobs=1, reps=10_000, kappa=1.0, intensity_mode="exact"):
    """``sup Z = U_1 f_max`` per realization and ``sup Z ~ Frechet(rate f_max)``."""
    keys = RngStream(seed).spawn_keys("sup-law", np.arange(reps, dtype=np.uint64))
    fields = simulate_innovations(kappa, SPHERE, keys, intensity_mode=intensity_mode)
    exact = attained = True
    sups = np.empty(reps)
    for i, z in enumerate(fields):
        sups[i] = z.sup()
        exact &= bool(sups[i] == z.weights[0] * vmf_sup(kappa))
        # independent cross-check: the top center attains the sup up to the
        # rounding of |mu|^2, and no atom center exceeds it
        at_centers = z.evaluate(z.centers)
        attained &= bool(abs(at_centers[0] - sups[i]) <= 1e-15 * sups[i]
                         and at_centers.max() <= sups[i])
    scale = intensity_rate(intensity_mode) * vmf_sup(kappa)
    ks = ks_frechet(sups, scale=scale)
    params = {"kappa": kappa, "intensity_mode": intensity_mode, "scale": scale}
    return [Report("sup-law-exact", exact, params, float(exact), None, 1.0, reps, seed),
            Report("sup-law-attained", attained, params, float(attained), None, 1.0, reps, seed),
            Report.from_ks("sup-law-frechet", ks, params, seed)]


def rotational_stability(seed=3, n_jobs=1, n_configs=20):
    """Both sides of the rotation identity for random configurations."""
    rng = RngStream(seed)
    out = []
    for c in range(n_configs):
        sub = rng.spawn("config", c)
        m = 1 + int(sub.random() * 5)
        pts = uniform_sphere_samples(sub, m)
        axis = uniform_sphere_samples(sub, 1)[0]
        theta = 2.0 * math.pi * sub.random()
        kappa = 5.0 * sub.random()
        r = rotation_stability_check(pts, theta, axis, kappa, grid_n=10_000, mc_n=100_000,
                                     rng=sub)
        ok = r.rel_err < 1e-2 and r.mc_agrees
        out.append(Report("rotational-stability", ok,
                          {"M": m, "theta": theta, "axis": axis, "kappa": kappa,
                           "rhs": r.rhs, "lhs_mc": r.lhs_mc, "rhs_mc": r.rhs_mc,
                           "rhs_mc_stderr": r.rhs_mc_stderr},
                          r.lhs, r.lhs_mc_stderr, r.rhs, 100_000, seed))
    return out


def stationarity(seed=4, n_jobs=1, reps=10_000):
    """Stationary-draw margins, before and after one step, for a in {0.5, 0.9}."""
    out = []
    for a in (0.5, 0.9):
        cfg = ChainConfig(a=a, theta=0.7, axis=UnitVec3(1.0, 0.0, 1.0), kappa=1.0)
        sp = StationaryParams.derive(cfg)
        rng = RngStream(seed)
        states = stationary_draws(cfg, sp, rng, reps, n_jobs=n_jobs)
        _, vals = run_ensemble(states, 1, rng, probes=PROBE, n_jobs=n_jobs)
        for t in (0, 1):
            out.append(Report.from_ks("stationarity", ks_frechet(vals[t, :, 0]),
                                      {"a": a, "steps": t, "J": sp.J}, seed))
    return out


def drift_fields(L_values=(1e-9, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0, 1000.0),
                 gamma=0.5):
    """Initial fields with ``L(h) = sup h^gamma`` at the given values,
    alternating constants and vMF mixtures."""
    fields = []
    for i, L in enumerate(L_values):
        s = L ** (1.0 / gamma)
        if i % 2 == 0:
            fields.append(ConstantField(s))
        else:
            p1 = VmfParams(UnitVec3(0.0, 0.0, 1.0), 2.0)
            p2 = VmfParams(UnitVec3(1.0, 0.0, 0.0), 0.5)
            fields.append(VmfMixtureField(((s / vmf_sup(p1), p1),
                                           (0.5 * s / vmf_sup(p2), p2))))
    return fields


def drift(seed=5, n_jobs=1, n=100_000):
    """Drift inequality and closed-form agreement over the (a, gamma, kappa) grid."""
    out = []
    for a in (0.25, 0.5, 0.9):
        for gamma in (0.3, 0.5, 0.7):
            for kappa in (0.0, 1.0, 2.0):
                cfg = ChainConfig(a=a, kappa=kappa)
                for k, h in enumerate(drift_fields(gamma=gamma)):
                    r = drift_check(h, cfg, gamma, n, RngStream(seed))
                    out.append(Report("drift", r.passed,
                                      {"a": a, "gamma": gamma, "kappa": kappa, "field": k,
                                       "L_h": r.L_h, "rhs": r.rhs, "beta": r.beta,
                                       "bigK": r.bigK},
                                      r.pl_mc, r.mc_stderr, r.pl_closed, n, seed))
    return out


def minorization(seed=6, n_jobs=1, n=10_000):
    """Coupling fraction against the analytic small-set bound, with exact
    one-step coupling on the flagged draws."""
    out = []
    cfg = ChainConfig(a=0.5, theta=0.4, axis=UnitVec3(0.0, 1.0, 1.0), kappa=1.0)
    p = VmfParams(UnitVec3(1.0, 0.0, 0.0), 3.0)
    for R in (0.5, 1.0, 5.0):
        h1 = ConstantField(R)
        h2 = VmfMixtureField(((0.5 * R / vmf_sup(p), p),))
        r = minorization_check(h1, h2, cfg, R, n, RngStream(seed))
        out.append(Report("minorization", r.passed,
                          {"a": cfg.a, "kappa": cfg.kappa, "R": R,
                           "coupled_exactly": r.coupled_exactly, "n_verified": r.n_verified},
                          r.alpha_empirical, r.stderr, r.alpha_analytic, n, seed))
    return out


def coupling_contraction(seed=7, n_jobs=1, n_seeds=100, horizon=50):
    """``d_t <= a^t ||h1 - h2|| + 1e-12`` along synchronous couplings."""
    cfg = ChainConfig(a=0.7, theta=0.3, axis=UnitVec3(1.0, 1.0, 0.0), kappa=1.0)
    grid = fibonacci_grid(4096)
    p = VmfParams(UnitVec3(0.0, 0.6, 0.8), 2.0)
    worst = -math.inf
    ok = True
    for s in range(n_seeds):
        h2 = VmfMixtureField(((3.0 + s / 10.0, p),))
        # below the infimum of h2, so the sup-distance is sup h2 - c exactly
        c = 0.5 * h2.inf_bound()
        norm = h2.sup() - c
        d = coupled_trajectory(ConstantField(c), h2, cfg, horizon, RngStream(seed + s), grid)
        excess = d - (cfg.a ** np.arange(horizon + 1) * norm + 1e-12)
        worst = max(worst, float(excess.max()))
        ok &= bool(np.all(excess <= 0.0))
    return [Report("coupling-contraction", ok,
                   {"a": cfg.a, "theta": cfg.theta, "kappa": cfg.kappa, "horizon": horizon},
                   worst, None, 0.0, n_seeds, seed)]


def geometric_memory_loss(seed=8, n_jobs=1, reps=10_000, horizon=10):
    """Decay of the Kolmogorov distance from the constant start 100 at a = 0.5."""
    cfg = ChainConfig(a=0.5, theta=0.3, axis=UnitVec3(0.0, 0.0, 1.0), kappa=1.0)
    r = convergence_rate(cfg, ConstantField(100.0), PROBE, horizon, reps, RngStream(seed),
                         n_jobs=n_jobs)
    return [Report("geometric-memory-loss", r.passed,
                   {"a": cfg.a, "h0": 100.0, "horizon": horizon, "fit_range": r.fit_range,
                    "distances": r.distances, "noise_floor": r.noise_floor},
                   r.fitted_log_slope, None, math.log(cfg.a) + 0.1, reps, seed)]


def chapman_kolmogorov(seed=9, n_jobs=1, reps=10_000):
    """Two steps of s = 0.5 against one step of s = 1 at a probe."""
    cfg = ChainConfig.from_continuous(0.7, 1.0, theta=0.9, axis=UnitVec3(1.0, 0.0, 0.0),
                                      kappa=1.0)
    p = VmfParams(UnitVec3(0.0, 0.0, 1.0), 4.0)
    h0 = VmfMixtureField(((2.0 / vmf_sup(p), p),))
    start = [initial_state(h0, cfg)] * reps
    rng = RngStream(seed)
    _, half = run_ensemble(start, 2, rng, probes=PROBE, tag="half", s=0.5, n_jobs=n_jobs)
    _, full = run_ensemble(start, 1, rng, probes=PROBE, tag="full", s=1.0, n_jobs=n_jobs)
    ks = ks_two_sample(half[2, :, 0], full[1, :, 0], threshold=0.023)
    return [Report.from_ks("chapman-kolmogorov", ks, {"nu": 0.7, "theta": cfg.theta}, seed)]


def engineering_exactness(seed=10, n_jobs=1, n_seeds=100, cap=100_000):
    """Stopping, pruning and thread count never change evaluated values."""
    pts = fibonacci_grid(4096).nodes
    # brute-force oracle: every one of the cap-length events is evaluated
    grid = fibonacci_grid(256)
    keys = RngStream(seed).spawn_keys("exactness", np.arange(n_seeds, dtype=np.uint64))
    stop_ok = True
    for kappa in (0.0, 1.0, 2.0):
        stopped = simulate_innovations(kappa, grid, keys)
        for lo in range(0, n_seeds, 5):
            capped = simulate_innovations(kappa, grid, keys[lo:lo + 5], event_cap=cap,
                                          stop=False)
            for z1, z2 in zip(stopped[lo:lo + 5], capped):
                stop_ok &= len(z2) == cap and bool(np.array_equal(z1.evaluate(grid.nodes),
                                                                  z2.evaluate(grid.nodes)))
    cfg = ChainConfig(a=0.6, theta=0.5, axis=UnitVec3(1.0, 2.0, 2.0), kappa=2.0)
    prune_ok = True
    for s in range(n_seeds):
        rng = RngStream(seed).spawn("prune", s)
        pruned = unpruned = initial_state(ConstantField(1.0), cfg)
        inn_keys = rng.spawn_keys("step", np.arange(10, dtype=np.uint64))
        w, c, counts = simulate_flat(cfg.kappa, None, inn_keys, rate=cfg.rate)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        for k in range(10):
            z = InnovationField(w[bounds[k]:bounds[k + 1]], c[bounds[k]:bounds[k + 1]], cfg.kappa)
            pruned = _advance(pruned, 1.0, z, True)
            unpruned = _advance(unpruned, 1.0, z, False)
        prune_ok &= bool(np.array_equal(_evaluate(pruned, pts), _evaluate(unpruned, pts)))
    runs = []
    for jobs in (1, 4):
        states = stationary_draws(cfg, None, RngStream(seed), 400, n_jobs=jobs)
        _, vals = run_ensemble(states, 5, RngStream(seed), probes=pts[:16], n_jobs=jobs)
        runs.append(vals)
    thread_ok = bool(np.array_equal(runs[0], runs[1]))
    return [Report("exact-stopping", stop_ok, {"kappa": [0.0, 1.0, 2.0], "event_cap": cap},
                   float(stop_ok), None, 1.0, n_seeds, seed),
            Report("exact-pruning", prune_ok, {"a": cfg.a, "kappa": cfg.kappa, "steps": 10},
                   float(prune_ok), None, 1.0, n_seeds, seed),
            Report("thread-invariance", thread_ok, {"n_jobs": [1, 4]},
                   float(thread_ok), None, 1.0, 400, seed)]


CRITERIA = {
    1: ("margins", margins),
    2: ("sup-law", sup_law),
    3: ("rotational-stability", rotational_stability),
    4: ("stationarity", stationarity),
    5: ("drift", drift),
    6: ("minorization", minorization),
    7: ("coupling-contraction", coupling_contraction),
    8: ("geometric-memory-loss", geometric_memory_loss),
    9: ("chapman-kolmogorov", chapman_kolmogorov),
    10: ("engineering-exactness", engineering_exactness),
}


def run_criterion(number, seed=None, n_jobs=1):
    """Reports of one criterion; ``seed`` offsets the per-criterion default."""
    _, fn = CRITERIA[number]
    if seed is None:
        return fn(n_jobs=n_jobs)
    return fn(seed=seed + number, n_jobs=n_jobs)


def run_all(seed=None, n_jobs=1):
    reports = []
    for number in CRITERIA:
        reports.extend(run_criterion(number, seed, n_jobs))
    return reports
