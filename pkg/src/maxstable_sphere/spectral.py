"""Exact simulation of the max-stable innovation field on S^2.

The field is ``Z(x) = max_i U_i f(x; mu_i, kappa)`` where ``(U_i, mu_i)`` are
the points of a Poisson process with intensity ``u^-2 du x lambda(dmu)`` and
``f`` is the von Mises-Fisher density.  Arrivals ``S_1 < S_2 < ...`` of a
unit-rate Poisson process give ``U_i = rate / S_i``; marks are uniform.  The
sequence is stopped as soon as no later event can raise the running maximum,
so the stored finite event list reproduces the infinite maximum exactly.

Random numbers for event ``i`` of the innovation with key ``k`` come from
counters ``5 i`` (inter-arrival time) and ``5 i + 1 .. 5 i + 4`` (mark), so
a simulation does not depend on how many innovations are drawn together or
whether stopping is enabled.
"""

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._checks import check_interval, check_points
from .geometry import (
    KAPPA_MAX,
    SphericalGrid,
    UnitVec3,
    fibonacci_grid,
    normals_to_sphere,
    vmf_density_array,
    vmf_inf,
    vmf_sup,
)
from .rng import RngStream, as_stream, box_muller, uniforms_at

__all__ = [
    "SpectralEvent",
    "InnovationField",
    "InnovationSpec",
    "CustomInnovation",
    "RandomBumpInnovation",
    "BumpField",
    "ResourceLimitError",
    "LowerBoundWarning",
    "SPHERE",
    "GRID_EXACT",
    "SPHERE_EXACT",
    "intensity_rate",
    "simulate_innovation",
    "simulate_innovations",
    "top_weights",
    "eval_field",
    "field_sup",
    "field_inf_bound",
    "write_events_csv",
    "read_events_csv",
]

GRID_EXACT = "grid-exact"
SPHERE_EXACT = "sphere-exact"
SPHERE = None  # whole-sphere marker for ``eval_set``
DEFAULT_EVENT_CAP = 10 ** 6
_SLOTS = 5
_MAX_BLOCK_ELEMENTS = 1 << 22
# evaluation blocks small enough to stay in cache
_EVAL_BLOCK_ELEMENTS = 1 << 16


class ResourceLimitError(RuntimeError):
    """Raised when the stopping rule is not met within the event cap."""


class LowerBoundWarning(UserWarning):
    """Grid-exact field evaluated off its evaluation set: value is a lower bound."""


def intensity_rate(mode="exact"):
    """Arrival rate of ``1 / U``: 4 pi for the exact intensity, 1 for ``"unit"``."""
    if mode == "exact":
        return 4.0 * math.pi
    if mode == "unit":
        return 1.0
    raise ValueError(f"intensity mode must be 'exact' or 'unit', got {mode!r}")


@dataclass(frozen=True)
class SpectralEvent:
    weight: float
    center: UnitVec3

    def __post_init__(self):
        if not (math.isfinite(self.weight) and self.weight > 0.0):
            raise ValueError(f"event weight must be positive and finite, got {self.weight!r}")
        if not isinstance(self.center, UnitVec3):
            object.__setattr__(self, "center", UnitVec3.from_array(self.center))


class InnovationField:
    """Finite max of weighted vMF atoms, sorted by decreasing weight.

    Parameters
    ----------
    weights : array-like of shape (m,)
    centers : array-like of shape (m, 3)
    kappa : float
    mode : {"grid-exact", "sphere-exact"}
    intensity_rate : float
    eval_points : ndarray of shape (n, 3) or None
        Points on which a grid-exact field is guaranteed exact.
    """

    def __init__(self, weights, centers, kappa, mode=SPHERE_EXACT,
                 intensity_rate=4.0 * math.pi, eval_points=None):
        w = np.asarray(weights, dtype=float).reshape(-1)
        c = np.asarray(centers, dtype=float).reshape(-1, 3)
        if len(w) == 0 or len(w) != len(c):
            raise ValueError("an innovation field needs >= 1 event and one center per weight")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("event weights must be positive and finite")
        order = np.argsort(-w, kind="stable")
        w, c = w[order], c[order]
        for arr in (w, c):
            arr.setflags(write=False)
        self.weights = w
        self.centers = c
        self.kappa = float(kappa)
        if mode not in (GRID_EXACT, SPHERE_EXACT):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.intensity_rate = float(intensity_rate)
        if eval_points is not None:
            eval_points = np.array(eval_points, dtype=float)
            eval_points.setflags(write=False)
        self.eval_points = eval_points

    @classmethod
    def from_events(cls, events, kappa, **kwargs):
        w = [e.weight for e in events]
        c = [e.center.as_array() for e in events]
        return cls(w, c, kappa, **kwargs)

    @property
    def events(self):
        return tuple(SpectralEvent(float(w), UnitVec3.from_array(c))
                     for w, c in zip(self.weights, self.centers))

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return (f"InnovationField(n_events={len(self)}, kappa={self.kappa}, "
                f"mode={self.mode!r}, top_weight={self.weights[0]:.6g})")

    def evaluate(self, points):
        """Field values at an (n, 3) array of points."""
        pts = check_points(points)
        return max_of_atoms(pts, self.weights, self.centers, self.kappa)

    def sup(self):
        return field_sup(self)

    def inf_bound(self):
        return field_inf_bound(self)

    def covers(self, points):
        """True where the points belong to the exactness set."""
        pts = check_points(points)
        if self.mode == SPHERE_EXACT:
            return np.ones(len(pts), dtype=bool)
        ev = self.eval_points
        return np.array([bool(np.any(np.all(ev == p, axis=1))) for p in pts])


def max_of_atoms(points, weights, centers, kappa, out=None):
    """``max_i weights[i] f(x; centers[i], kappa)`` for each row of ``points``."""
    n = len(points)
    best = np.zeros(n) if out is None else out
    m = len(weights)
    if m == 0:
        return best
    step = max(1, _EVAL_BLOCK_ELEMENTS // max(n, 1))
    for lo in range(0, m, step):
        vals = vmf_density_array(points, centers[lo:lo + step], kappa)
        vals *= weights[lo:lo + step, None]
        np.maximum(best, vals.max(axis=0), out=best)
    return best


def _first_block(kappa):
    # expected number of sphere-exact events is about exp(2 kappa)
    return int(min(4096, 8 + 1.5 * math.exp(2.0 * min(kappa, 10.0))))


def _resolve_eval_set(eval_set):
    if eval_set is SPHERE:
        return None
    if isinstance(eval_set, str):
        if eval_set in ("sphere", SPHERE_EXACT):
            return None
        raise ValueError(f"unknown eval_set marker {eval_set!r}")
    return check_points(eval_set, "eval_set")


def simulate_innovations(kappa, eval_set, keys, intensity_mode="exact",
                         event_cap=DEFAULT_EVENT_CAP, stop=True, rate=None):
    """Simulate one innovation field per stream key.

    Parameters
    ----------
    kappa : float
        Concentration, ``0 <= kappa <= 10``.
    eval_set : SphericalGrid, (n, 3) array, or ``SPHERE``
        Grid-exact stopping on the given points, or sphere-exact stopping.
    keys : array of uint64
        One stream key per innovation.
    intensity_mode : {"exact", "unit"}
    event_cap : int
        Maximum number of events per innovation.
    stop : bool
        If False, exactly ``event_cap`` events are generated (no stopping).

    Returns
    -------
    list of InnovationField
    """
    points = _resolve_eval_set(eval_set)
    rate = intensity_rate(intensity_mode) if rate is None else float(rate)
    weights, centers, counts = simulate_flat(kappa, points, keys, rate=rate,
                                             event_cap=event_cap, stop=stop)
    mode = SPHERE_EXACT if points is None else GRID_EXACT
    bounds = np.concatenate([[0], np.cumsum(counts)])
    return [InnovationField(weights[lo:hi], centers[lo:hi], kappa, mode=mode,
                            intensity_rate=rate, eval_points=points)
            for lo, hi in zip(bounds[:-1], bounds[1:])]


def simulate_flat(kappa, points, keys, rate=4.0 * math.pi,
                  event_cap=DEFAULT_EVENT_CAP, stop=True):
    """Array form of :func:`simulate_innovations`.

    Returns ``(weights, centers, counts)``: events of all innovations
    concatenated in key order (each block in decreasing weight) and the
    number of events per key.  ``points=None`` selects sphere-exact stopping.
    """
    kappa = check_interval(kappa, "kappa", 0.0, KAPPA_MAX)
    keys = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
    cap = int(event_cap)
    if points is None:
        rows_per_chunk = max(1, len(keys))
    else:
        first = min(_first_block(kappa), cap)
        rows_per_chunk = max(1, _MAX_BLOCK_ELEMENTS // (first * len(points)))
    ws, cs, ns = [], [], []
    for lo in range(0, len(keys), rows_per_chunk):
        w, c, n = _simulate_chunk(keys[lo:lo + rows_per_chunk], kappa, points, rate, cap, stop)
        ws.append(w)
        cs.append(c)
        ns.append(n)
    return np.concatenate(ws), np.concatenate(cs), np.concatenate(ns)


def _simulate_chunk(keys, kappa, points, rate, cap, stop):
    b = len(keys)
    fmax, fmin = vmf_sup(kappa), vmf_inf(kappa)
    carry = np.zeros(b)
    top = np.zeros(b)
    env = None if points is None else np.zeros((b, len(points)))
    pieces = []
    active = np.arange(b)
    start = 0
    block = _first_block(kappa)
    slot = np.arange(1, _SLOTS, dtype=np.uint64)
    while len(active):
        if start >= cap:
            if not stop:
                break
            raise ResourceLimitError(
                f"stopping rule not met within {cap} events (kappa={kappa}); "
                "raise event_cap or use grid-exact evaluation")
        e_len = min(block, cap - start)
        if points is not None:
            e_len = max(1, min(e_len, _MAX_BLOCK_ELEMENTS // (len(active) * len(points))))
        idx = np.arange(start, start + e_len + 1, dtype=np.uint64)
        k = keys[active][:, None]
        e = -np.log(uniforms_at(k, _SLOTS * idx[None, :]))
        arrivals = np.cumsum(np.concatenate([carry[active][:, None], e], axis=1), axis=1)[:, 1:]
        u = rate / arrivals
        mark_ctr = (_SLOTS * idx[:e_len])[:, None] + slot[None, :]
        centers = normals_to_sphere(uniforms_at(k[:, :, None], mark_ctr[None, :, :]))
        w = u[:, :e_len]
        if start == 0:
            top[active] = w[:, 0]
        if not stop:
            done = np.zeros((len(active), e_len), dtype=bool)
        elif points is None:
            done = u[:, 1:] * fmax < (top[active] * fmin)[:, None]
        else:
            dens = vmf_density_array(points, centers.reshape(-1, 3), kappa)
            vals = w[:, :, None] * dens.reshape(len(active), e_len, len(points))
            np.maximum(vals[:, 0, :], env[active], out=vals[:, 0, :])
            cum = np.maximum.accumulate(vals, axis=1)
            done = u[:, 1:] * fmax < cum.min(axis=2)
            env[active] = cum[:, -1, :]
        stopped = done.any(axis=1)
        n_keep = np.where(stopped, np.argmax(done, axis=1) + 1, e_len)
        mask = np.arange(e_len)[None, :] < n_keep[:, None]
        rows = np.broadcast_to(active[:, None], mask.shape)[mask]
        pieces.append((rows, start + np.nonzero(mask)[1], w[mask], centers[mask]))
        going = ~stopped
        carry[active[going]] = arrivals[going, e_len - 1]
        active = active[going]
        start += e_len
        block = min(2 * block, 1 << 16)
    rows = np.concatenate([p[0] for p in pieces])
    order = np.lexsort((np.concatenate([p[1] for p in pieces]), rows))
    weights = np.concatenate([p[2] for p in pieces])[order]
    centers = np.concatenate([p[3] for p in pieces])[order]
    return weights, centers, np.bincount(rows, minlength=b)


def simulate_innovation(kappa, eval_set, rng, intensity_mode="exact",
                        event_cap=DEFAULT_EVENT_CAP, stop=True):
    """Simulate one innovation field from a random stream.

    The innovation consumes a single key drawn from ``rng`` (its next
    counter), so successive calls give independent fields.

    Raises
    ------
    ResourceLimitError
        If the stopping rule is not met within ``event_cap`` events.
    """
    rng = as_stream(rng)
    key = rng.spawn("innovation", rng.position).stream_id
    rng.position += 1
    return simulate_innovations(kappa, eval_set, np.array([key], dtype=np.uint64),
                                intensity_mode=intensity_mode, event_cap=event_cap,
                                stop=stop)[0]


def top_weights(keys, intensity_mode="exact", rate=None):
    """Largest weight ``U_1`` of the innovations with the given keys.

    Uses the same counter as :func:`simulate_innovations`, so it equals the
    top weight of the full simulation without generating the other events.
    """
    rate = intensity_rate(intensity_mode) if rate is None else float(rate)
    keys = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
    e = -np.log(uniforms_at(keys, np.zeros(len(keys), dtype=np.uint64)))
    return rate / e


def eval_field(field, x):
    """Value of ``field`` at a unit vector ``x``.

    Off the evaluation set of a grid-exact field the value is only a lower
    bound of the untruncated maximum; a :class:`LowerBoundWarning` is issued.
    """
    if not isinstance(field, InnovationField):
        return float(field.evaluate(check_points(x))[0])
    pts = check_points(x)
    if field.mode == GRID_EXACT and not field.covers(pts)[0]:
        warnings.warn("point outside the grid-exact evaluation set; value is a lower bound",
                      LowerBoundWarning, stacklevel=2)
    return float(field.evaluate(pts)[0])


def field_sup(field):
    """Supremum of the field over S^2: top weight times the density maximum."""
    return float(field.weights[0]) * vmf_sup(field.kappa)


def field_inf_bound(field):
    """Certified lower bound of the field's infimum over S^2."""
    return float(field.weights[0]) * vmf_inf(field.kappa)


# ---------------------------------------------------------------------------
# generalized innovations


class CustomInnovation:
    """Generator of bounded, positive, continuous innovation fields.

    Subclasses implement :meth:`sample`, returning an object with
    ``evaluate(points)``, ``sup()`` (exact or upper bound of the supremum,
    computable per realization) and ``inf_bound()`` (positive lower bound).
    """

    def sample(self, rng):
        raise NotImplementedError

    def sample_many(self, keys):
        return [self.sample(RngStream(0, int(k))) for k in np.atleast_1d(keys)]


@dataclass(frozen=True, eq=False)
class BumpField:
    """``amplitude * (floor + f(x; center, kappa))``."""

    amplitude: float
    floor: float
    center: np.ndarray
    kappa: float

    def evaluate(self, points):
        pts = check_points(points)
        dens = vmf_density_array(pts, self.center[None, :], self.kappa)[0]
        return self.amplitude * (self.floor + dens)

    def sup(self):
        return self.amplitude * (self.floor + vmf_sup(self.kappa))

    def inf_bound(self):
        return self.amplitude * (self.floor + vmf_inf(self.kappa))


@dataclass(frozen=True)
class RandomBumpInnovation(CustomInnovation):
    """Log-normal amplitude times a vMF bump on a positive floor.

    Bounded, positive and continuous but not max-stable.
    """

    kappa: float = 1.0
    sigma: float = 0.5
    floor: float = 0.05

    def sample(self, rng):
        rng = as_stream(rng)
        u = rng.random(6)
        g = box_muller(u[0:1], u[1:2])[0, 0]
        center = normals_to_sphere(u[2:6][None, :])[0]
        return BumpField(float(np.exp(self.sigma * g)), self.floor, center, self.kappa)


@dataclass(frozen=True)
class InnovationSpec:
    """Which innovation the chain uses.

    ``kind="vmf-maxstable"`` simulates the spectral field; ``kind="custom"``
    delegates to ``generator`` (a :class:`CustomInnovation`).
    """

    kind: str = "vmf-maxstable"
    generator: object = None
    intensity_mode: str = "exact"
    event_cap: int = DEFAULT_EVENT_CAP

    def __post_init__(self):
        if self.kind not in ("vmf-maxstable", "custom"):
            raise ValueError(f"unknown innovation kind {self.kind!r}")
        if self.kind == "custom":
            g = self.generator
            if g is None or not callable(getattr(g, "sample", None)):
                raise ValueError("custom innovations need a generator with a sample(rng) method")
        intensity_rate(self.intensity_mode)

    @property
    def rate(self):
        return intensity_rate(self.intensity_mode)


# ---------------------------------------------------------------------------
# event CSV


def write_events_csv(field, path):
    """Write ``weight,mu_x,mu_y,mu_z`` rows (decreasing weight, 17 digits)."""
    with open(path, "w", newline="") as fh:
        fh.write(events_csv_text(field))


def events_csv_text(field):
    lines = ["weight,mu_x,mu_y,mu_z"]
    for w, c in zip(field.weights, field.centers):
        lines.append(",".join(f"{v:.17g}" for v in (w, c[0], c[1], c[2])))
    return "\n".join(lines) + "\n"


def read_events_csv(path, kappa, **kwargs):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["weight", "mu_x", "mu_y", "mu_z"]:
            raise ValueError(f"unexpected event CSV header {reader.fieldnames}")
        rows = [(float(r["weight"]), float(r["mu_x"]), float(r["mu_y"]), float(r["mu_z"]))
                for r in reader]
    arr = np.array(rows, dtype=float)
    return InnovationField(arr[:, 0], arr[:, 1:], kappa, **kwargs)


def default_grid(n=4096):
    return fibonacci_grid(n)


__all__ += ["SphericalGrid", "max_of_atoms", "events_csv_text", "default_grid"]
