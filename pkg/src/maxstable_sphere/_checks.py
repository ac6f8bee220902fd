"""Input validation helpers shared by the public API."""

import math
import numbers

import numpy as np


def check_finite(value, name):
    if not isinstance(value, numbers.Real) or not math.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    return float(value)


def check_interval(value, name, low=None, high=None, closed_low=True, closed_high=True):
    """Check ``low <= value <= high`` (endpoints open or closed) and return a float."""
    value = check_finite(value, name)
    if low is not None:
        ok = value >= low if closed_low else value > low
        if not ok:
            sym = ">=" if closed_low else ">"
            raise ValueError(f"{name} must be {sym} {low}, got {value!r}")
    if high is not None:
        ok = value <= high if closed_high else value < high
        if not ok:
            sym = "<=" if closed_high else "<"
            raise ValueError(f"{name} must be {sym} {high}, got {value!r}")
    return value


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_points(points, name="points"):
    """Return ``points`` as a float array of shape (n, 3), each row normalized.

    Accepts a single 3-vector, anything with an ``as_array`` method
    (UnitVec3, SphericalGrid), a sequence of such, or an (n, 3) array-like.
    """
    if hasattr(points, "as_array"):
        points = points.as_array()
    elif isinstance(points, (list, tuple)):
        points = [p.as_array() if hasattr(p, "as_array") else p for p in points]
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    norms = np.sqrt(arr[:, 0] ** 2 + arr[:, 1] ** 2 + arr[:, 2] ** 2)
    if np.any(norms == 0.0):
        raise ValueError(f"{name} contains a zero vector")
    return arr / norms[:, None]
