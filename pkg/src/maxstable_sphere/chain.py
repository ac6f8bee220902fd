"""The function-valued Markov chain ``X(t, x) = max{a X(t-1, R x), (1-a) Z(t, x)}``.

A state is stored as an exactly evaluable field: a list of vMF atoms (the
surviving events of past innovations) plus opaque scaled terms (the initial
field and any custom innovations).  Instead of rotating arguments, each atom
keeps its original mark and its age; since ``f(R x; mu) = f(x; R^T mu)`` the
atom is evaluated with center ``R_{theta * age}^T mu``, re-derived from the
accumulated angle so no rotation error accumulates over long runs.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from ._checks import check_finite, check_interval, check_points, check_positive_int
from ._parallel import map_ranges
from .geometry import (
    KAPPA_MAX,
    UnitVec3,
    VmfParams,
    _apply_rows,
    fibonacci_grid,
    rodrigues_matrix,
    vmf_density_array,
    vmf_inf,
    vmf_sup,
)
from .rng import as_stream
from .spectral import (
    SPHERE,
    InnovationField,
    InnovationSpec,
    max_of_atoms,
    simulate_flat,
    simulate_innovation,
    top_weights,
)

__all__ = [
    "ChainConfig",
    "ConstantField",
    "VmfMixtureField",
    "FieldTerm",
    "ChainState",
    "StationaryParams",
    "initial_state",
    "step",
    "step_s",
    "eval_state",
    "prune",
    "state_sup",
    "stationary_draw",
    "stationary_draws",
    "coupled_trajectory",
    "run_ensemble",
]


@dataclass(frozen=True)
class ChainConfig:
    """Model parameters of the chain.

    Use :meth:`from_continuous` or :meth:`from_discrete` to derive ``a`` from
    ``(nu, step)`` or ``phi``.
    """

    a: float
    theta: float = 0.0
    axis: UnitVec3 = UnitVec3(0.0, 0.0, 1.0)
    kappa: float = 1.0
    innovation: InnovationSpec = InnovationSpec()
    a_provenance: tuple = ("direct",)

    def __post_init__(self):
        check_interval(self.a, "a", 0.0, 1.0, closed_low=False, closed_high=False)
        check_finite(self.theta, "theta")
        check_interval(self.kappa, "kappa", 0.0, KAPPA_MAX)
        if not isinstance(self.axis, UnitVec3):
            object.__setattr__(self, "axis", UnitVec3.from_array(self.axis))
        kind = self.a_provenance[0]
        if kind == "continuous":
            _, nu, s = self.a_provenance
            if abs(self.a - math.exp(-nu * s)) > 1e-12:
                raise ValueError("a must equal exp(-nu * step) for continuous provenance")
        elif kind == "discrete":
            if abs(self.a - self.a_provenance[1]) > 1e-12:
                raise ValueError("a must equal phi for discrete provenance")
        elif kind != "direct":
            raise ValueError(f"unknown a_provenance {kind!r}")

    @classmethod
    def from_continuous(cls, nu, step=1.0, **kwargs):
        nu = check_interval(nu, "nu", 0.0, closed_low=False)
        step = check_interval(step, "step", 0.0, closed_low=False)
        return cls(a=math.exp(-nu * step), a_provenance=("continuous", nu, step), **kwargs)

    @classmethod
    def from_discrete(cls, phi, **kwargs):
        phi = check_interval(phi, "phi", 0.0, 1.0, closed_low=False, closed_high=False)
        return cls(a=phi, a_provenance=("discrete", phi), **kwargs)

    @property
    def rate(self):
        return self.innovation.rate

    @property
    def sigma_z(self):
        """Scale of the Frechet law of the innovation supremum."""
        return self.rate * vmf_sup(self.kappa)


# ---------------------------------------------------------------------------
# initial fields


@dataclass(frozen=True)
class ConstantField:
    c: float

    def __post_init__(self):
        check_interval(self.c, "c", 0.0, closed_low=False)

    def evaluate(self, points):
        return np.full(len(check_points(points)), float(self.c))

    def sup(self):
        return float(self.c)

    def inf_bound(self):
        return float(self.c)


@dataclass(frozen=True, eq=False)
class VmfMixtureField:
    """Pointwise maximum of weighted vMF densities ``max_k w_k f(x; mu_k, kappa_k)``."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), p if isinstance(p, VmfParams) else VmfParams(*p))
                      for w, p in self.components)
        if not comps or any(not (w > 0.0 and math.isfinite(w)) for w, _ in comps):
            raise ValueError("mixture needs >= 1 component with positive finite weight")
        object.__setattr__(self, "components", comps)

    def evaluate(self, points):
        pts = check_points(points)
        out = np.zeros(len(pts))
        for w, p in self.components:
            dens = vmf_density_array(pts, p.mu.as_array()[None, :], p.kappa)[0]
            np.maximum(out, w * dens, out=out)
        return out

    def sup(self):
        return max(w * vmf_sup(p) for w, p in self.components)

    def inf_bound(self):
        return max(w * vmf_inf(p) for w, p in self.components)


@dataclass(frozen=True, eq=False)
class FieldTerm:
    """Contribution ``scale * field(R_{theta * age} x)`` of an opaque field."""

    scale: float
    age: float
    field: object
    initial: bool = False


# ---------------------------------------------------------------------------
# state


@functools.lru_cache(maxsize=8192)
def _inverse_rotation(angle, axis):
    return rodrigues_matrix(angle, axis).matrix.T


def _rotate_marks(marks, ages, theta, axis):
    """Centers ``R_{theta * age}^T mark`` for each atom."""
    if theta == 0.0 or len(marks) == 0:
        return marks.copy()
    out = np.empty_like(marks)
    for age in np.unique(ages):
        sel = ages == age
        out[sel] = _apply_rows(_inverse_rotation(theta * float(age), axis), marks[sel])
    return out


@dataclass(frozen=True, eq=False)
class ChainState:
    """Exactly evaluable state of the chain at step ``t``.

    Attributes
    ----------
    t : int
        Steps since initialization.
    elapsed : float
        Elapsed model time (equals ``t`` unless fractional steps were taken).
    weights, marks, ages : ndarray
        vMF atoms, sorted by decreasing weight.  ``weights`` already include
        the decay ``a^age (1 - a)``.
    centers : ndarray
        Counter-rotated centers used for evaluation.
    terms : tuple of FieldTerm
        Initial field and custom innovation contributions.
    """

    t: int
    elapsed: float
    weights: np.ndarray
    marks: np.ndarray
    ages: np.ndarray
    centers: np.ndarray
    terms: tuple
    config: ChainConfig = field(repr=False)

    def __repr__(self):
        return (f"ChainState(t={self.t}, n_events={len(self.weights)}, "
                f"n_terms={len(self.terms)}, sup={state_sup(self):.6g})")

    @property
    def n_events(self):
        return len(self.weights)

    @property
    def scale(self):
        """Scale of the initial term (0 once it has been pruned)."""
        for term in self.terms:
            if term.initial:
                return term.scale
        return 0.0

    def evaluate(self, points):
        return _evaluate(self, check_points(points))

    def sup(self):
        return state_sup(self)

    def inf_bound(self):
        return _envelope(self)


def _make_state(config, t, elapsed, weights, marks, ages, terms, centers=None):
    weights = np.asarray(weights, dtype=float)
    marks = np.asarray(marks, dtype=float).reshape(-1, 3)
    ages = np.asarray(ages, dtype=float)
    order = np.argsort(-weights, kind="stable")
    weights, marks, ages = weights[order], marks[order], ages[order]
    if centers is None:
        centers = _rotate_marks(marks, ages, config.theta, config.axis)
    else:
        centers = np.asarray(centers, dtype=float).reshape(-1, 3)[order]
    for arr in (weights, marks, ages, centers):
        arr.setflags(write=False)
    return ChainState(int(t), float(elapsed), weights, marks, ages, centers, tuple(terms), config)


def initial_state(h, config):
    """State at ``t = 0`` equal to the initial field ``h`` (a constant is
    accepted for ``ConstantField(h)``)."""
    if isinstance(h, (int, float)):
        h = ConstantField(float(h))
    if isinstance(h, InnovationField):
        return _make_state(config, 0, 0.0, h.weights, h.centers, np.zeros(len(h)), ())
    return _make_state(config, 0, 0.0, [], np.empty((0, 3)), [], (FieldTerm(1.0, 0.0, h, initial=True),))


def _evaluate(state, pts):
    out = max_of_atoms(pts, state.weights, state.centers, state.config.kappa)
    cfg = state.config
    for term in state.terms:
        if term.age == 0.0 or cfg.theta == 0.0:
            arg = pts
        else:
            arg = rodrigues_matrix(cfg.theta * term.age, cfg.axis).apply(pts)
        np.maximum(out, term.scale * term.field.evaluate(arg), out=out)
    return out


def eval_state(state, x):
    """Exact value of the state at a unit vector ``x``."""
    return float(_evaluate(state, check_points(x))[0])


def state_sup(state):
    """Supremum over S^2 (exact for vMF atoms and closed-form initial fields)."""
    best = float(state.weights[0]) * vmf_sup(state.config.kappa) if len(state.weights) else 0.0
    for term in state.terms:
        best = max(best, term.scale * term.field.sup())
    return best


def _envelope(state):
    """Certified lower bound of the state's infimum over S^2."""
    best = float(state.weights[0]) * vmf_inf(state.config.kappa) if len(state.weights) else 0.0
    for term in state.terms:
        best = max(best, term.scale * term.field.inf_bound())
    return best


def prune(state):
    """Drop atoms and terms dominated everywhere on S^2.

    An atom with ``w * f_max`` below the envelope lower bound can never
    realize the maximum, so evaluation is unchanged at every point.
    """
    env = _envelope(state)
    keep = state.weights * vmf_sup(state.config.kappa) >= env
    terms = tuple(term for term in state.terms if term.scale * term.field.sup() >= env)
    if keep.all() and len(terms) == len(state.terms):
        return state
    return _make_state(state.config, state.t, state.elapsed, state.weights[keep],
                       state.marks[keep], state.ages[keep], terms,
                       centers=state.centers[keep])


def _draw_innovation(config, rng):
    spec = config.innovation
    if spec.kind == "custom":
        return spec.generator.sample(rng)
    return simulate_innovation(config.kappa, SPHERE, rng, intensity_mode=spec.intensity_mode,
                               event_cap=spec.event_cap)


def _advance(state, s, innovation, do_prune):
    if isinstance(innovation, InnovationField):
        if innovation.kappa != state.config.kappa:
            raise ValueError("innovation kappa does not match the chain")
        return _advance_atoms(state, s, innovation.weights, innovation.centers, do_prune)
    cfg = state.config
    decay = cfg.a if s == 1.0 else cfg.a ** s
    terms = [FieldTerm(term.scale * decay, term.age + s, term.field, term.initial)
             for term in state.terms]
    terms.append(FieldTerm(1.0 - decay, 0.0, innovation))
    new = _make_state(cfg, state.t + 1, state.elapsed + s, state.weights * decay,
                      state.marks, state.ages + s, terms)
    return prune(new) if do_prune else new


def _advance_atoms(state, s, new_weights, new_marks, do_prune):
    cfg = state.config
    decay = cfg.a if s == 1.0 else cfg.a ** s
    terms = [FieldTerm(term.scale * decay, term.age + s, term.field, term.initial)
             for term in state.terms]
    weights = np.concatenate([state.weights * decay, (1.0 - decay) * new_weights])
    marks = np.concatenate([state.marks, new_marks])
    ages = np.concatenate([state.ages + s, np.zeros(len(new_weights))])
    new = _make_state(cfg, state.t + 1, state.elapsed + s, weights, marks, ages, terms)
    return prune(new) if do_prune else new


def step(state, rng=None, innovation=None, do_prune=True):
    """One transition ``x -> max{a X(t, R x), (1 - a) Z(t + 1, x)}``.

    Parameters
    ----------
    state : ChainState
    rng : RngStream or int, optional
        Stream for the fresh innovation (ignored when ``innovation`` is given).
    innovation : InnovationField or field object, optional
        Use this realization of ``Z`` instead of simulating one; lets several
        chains share innovations.
    do_prune : bool
        Prune dominated atoms after the update.
    """
    if innovation is None:
        innovation = _draw_innovation(state.config, as_stream(rng))
    return _advance(state, 1.0, innovation, do_prune)


def step_s(state, s, rng=None, innovation=None, do_prune=True):
    """Transition over a time span ``s > 0``: decay ``a^s``, angle ``theta s``
    and innovation weight ``1 - a^s``."""
    s = check_interval(s, "s", 0.0, closed_low=False)
    if state.config.a_provenance[0] != "continuous":
        raise ValueError("fractional steps need a continuous-time configuration")
    if innovation is None:
        innovation = _draw_innovation(state.config, as_stream(rng))
    return _advance(state, s, innovation, do_prune)


# ---------------------------------------------------------------------------
# stationary sampling


@dataclass(frozen=True)
class StationaryParams:
    """Truncation of the stationary max-series at depth ``J``.

    ``J`` is the smallest depth with ``sigma_z a^(J+1) / epsilon <= delta``,
    so the discarded tail exceeds ``epsilon`` somewhere with probability at
    most ``delta``.
    """

    epsilon: float = 1e-3
    delta: float = 1e-3
    J: int = None

    @classmethod
    def derive(cls, config, epsilon=1e-3, delta=1e-3, sigma_z=None):
        epsilon = check_interval(epsilon, "epsilon", 0.0, closed_low=False)
        delta = check_interval(delta, "delta", 0.0, 1.0, closed_low=False, closed_high=False)
        sigma = config.sigma_z if sigma_z is None else float(sigma_z)
        depth = math.ceil(math.log(epsilon * delta / sigma) / math.log(config.a)) - 1
        return cls(epsilon, delta, max(0, depth))

    def tail_bound(self, config, sigma_z=None):
        sigma = config.sigma_z if sigma_z is None else float(sigma_z)
        return sigma * config.a ** (self.J + 1) / self.epsilon


def _resolve_sp(config, sp):
    if sp is None:
        return StationaryParams.derive(config)
    if sp.J is None:
        return StationaryParams.derive(config, sp.epsilon, sp.delta)
    return sp


def stationary_draws(config, sp, rng, n, start=0, n_jobs=1):
    """``n`` independent truncated stationary states (replicates
    ``start .. start + n - 1`` of the stream ``rng``)."""
    sp = _resolve_sp(config, sp)
    rng = as_stream(rng)
    depth = sp.J + 1
    decay = config.a ** np.arange(depth) * (1.0 - config.a)
    lags = np.arange(depth, dtype=np.uint64)
    # about 2e6 simulated events per chunk (a sphere-exact innovation has ~exp(2 kappa))
    chunk = max(1, int(2e6 / (depth * math.exp(2.0 * config.kappa))))

    def block(first, stop):
        states = []
        for lo in range(first, stop, chunk):
            reps = np.arange(lo, min(stop, lo + chunk), dtype=np.uint64)
            keys = rng.spawn_keys("stationary", reps[:, None], lags[None, :]).reshape(-1)
            if config.innovation.kind == "custom":
                fields = config.innovation.generator.sample_many(keys)
                for r in range(len(reps)):
                    terms = [FieldTerm(float(decay[j]), float(j), f)
                             for j, f in enumerate(fields[r * depth:(r + 1) * depth])]
                    states.append(prune(_make_state(config, 0, 0.0, [], np.empty((0, 3)), [],
                                                    terms)))
                continue
            states.extend(_stationary_atoms(config, keys, decay, len(reps)))
        return states

    return map_ranges(block, start, start + n, n_jobs)


def _stationary_atoms(config, keys, decay, n_reps):
    depth = len(decay)
    spec = config.innovation
    fmax, fmin = vmf_sup(config.kappa), vmf_inf(config.kappa)
    # the top weights alone fix the envelope; lags whose scaled top atom
    # cannot reach it are never simulated (counter-based keys keep the rest)
    scaled_top = (top_weights(keys, rate=spec.rate) * np.tile(decay, n_reps)).reshape(n_reps, depth)
    top = scaled_top.max(axis=1)
    live = np.flatnonzero(scaled_top * fmax >= top[:, None] * fmin)
    w, marks, counts = simulate_flat(config.kappa, None, keys[live], rate=spec.rate,
                                     event_cap=spec.event_cap)
    innov = np.repeat(live, counts)
    rep, lag = innov // depth, innov % depth
    weights = w * decay[lag]
    # same domination test as prune(), done before building the states
    keep = weights * fmax >= top[rep] * fmin
    weights, marks, rep, ages = weights[keep], marks[keep], rep[keep], lag[keep].astype(float)
    centers = _rotate_marks(marks, ages, config.theta, config.axis)
    bounds = np.searchsorted(rep, np.arange(n_reps + 1))
    return [_make_state(config, 0, 0.0, weights[lo:hi], marks[lo:hi], ages[lo:hi], (),
                        centers=centers[lo:hi])
            for lo, hi in zip(bounds[:-1], bounds[1:])]


def stationary_draw(config, sp=None, rng=None):
    """One draw of the truncated stationary solution
    ``max_{j <= J} a^j (1 - a) Z_j(R_{theta j} x)`` (no initial term)."""
    return stationary_draws(config, sp, rng, 1)[0]


# ---------------------------------------------------------------------------
# ensembles and coupling


def _innovations_for(config, keys):
    """Innovation realizations for the keys: InnovationFields or custom fields."""
    spec = config.innovation
    if spec.kind == "custom":
        return spec.generator.sample_many(keys)
    w, c, counts = simulate_flat(config.kappa, None, keys, rate=spec.rate,
                                 event_cap=spec.event_cap)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    return [InnovationField(w[lo:hi], c[lo:hi], config.kappa, intensity_rate=spec.rate)
            for lo, hi in zip(bounds[:-1], bounds[1:])]


def run_ensemble(states, n_steps, rng, probes=None, tag="trajectory", s=1.0,
                 first_step=0, callback=None, n_jobs=1):
    """Advance replicate states ``n_steps`` times with per-(replicate, step) keys.

    Parameters
    ----------
    states : list of ChainState
        Replicate ``r`` uses keys derived from ``(rng, tag, r, step)``.
    probes : (p, 3) array, optional
        If given, returns values at the probes, shape (n_steps + 1, n_reps, p).
    s : float
        Time span per step (``step_s`` semantics when not 1).
    callback : callable, optional
        Called as ``callback(k, states)`` after every step; forces ``n_jobs=1``.
    n_jobs : int
        Threads over replicate blocks; results do not depend on it.

    Returns
    -------
    states, values
    """
    rng = as_stream(rng)
    states = list(states)
    if not states:
        return states, None
    config = states[0].config
    pts = None if probes is None else check_points(probes)
    n_pts = 0 if pts is None else len(pts)

    def block(lo, hi):
        sub = states[lo:hi]
        reps = np.arange(lo, hi, dtype=np.uint64)
        vals = np.empty((n_steps + 1, hi - lo, n_pts))
        if pts is not None:
            for r, st in enumerate(sub):
                vals[0, r] = _evaluate(st, pts)
        for k in range(n_steps):
            keys = rng.spawn_keys(tag, reps, np.uint64(first_step + k))
            innovations = _innovations_for(config, keys)
            for r in range(len(sub)):
                sub[r] = _advance(sub[r], s, innovations[r], True)
                if pts is not None:
                    vals[k + 1, r] = _evaluate(sub[r], pts)
            if callback is not None:
                callback(k + 1, sub)
        return [(sub, vals)]

    pieces = map_ranges(block, 0, len(states), 1 if callback is not None else n_jobs)
    out = [st for sub, _ in pieces for st in sub]
    values = np.concatenate([v for _, v in pieces], axis=1) if pts is not None else None
    return out, values


def coupled_trajectory(h1, h2, config, horizon, rng=None, eval_set=None):
    """Run two chains on shared innovations and report sup-distances.

    Returns an array ``d`` of length ``horizon + 1`` with
    ``d[t] = max_x |X1(t, x) - X2(t, x)|`` over the evaluation nodes.
    """
    horizon = check_positive_int(horizon, "horizon")
    rng = as_stream(rng)
    if eval_set is None:
        eval_set = fibonacci_grid(4096)
    pts = check_points(eval_set)
    s1 = initial_state(h1, config)
    s2 = initial_state(h2, config)
    d = np.empty(horizon + 1)
    d[0] = np.max(np.abs(_evaluate(s1, pts) - _evaluate(s2, pts)))
    keys = rng.spawn_keys("couple", np.arange(horizon, dtype=np.uint64))
    innovations = _innovations_for(config, keys)
    for t in range(horizon):
        s1 = _advance(s1, 1.0, innovations[t], True)
        s2 = _advance(s2, 1.0, innovations[t], True)
        d[t + 1] = np.max(np.abs(_evaluate(s1, pts) - _evaluate(s2, pts)))
    return d
