"""Gamma and lower incomplete gamma functions in double precision.

Gamma comes from :mod:`math`; the incomplete gamma uses the power series for
``x < s + 1`` and a Lentz continued fraction for the upper tail otherwise.
"""

import math

__all__ = ["gamma", "log_gamma", "lower_incomplete_gamma", "regularized_lower_gamma"]

_EPS = math.ulp(1.0)
_TINY = 1e-300
_MAX_ITER = 500


def gamma(x):
    """Gamma function (``math.gamma``; ValueError at the poles)."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise ValueError(f"gamma has a pole at {x}")
    return math.gamma(x)


def log_gamma(x):
    """log Gamma(x) for ``x > 0``."""
    x = float(x)
    if x <= 0.0:
        raise ValueError("log_gamma requires x > 0")
    return math.lgamma(x)


def _series_p(s, x, lg):
    # P(s, x) = x^s e^-x / Gamma(s + 1) * sum_k x^k / ((s+1)...(s+k))
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return total * math.exp(-x + s * math.log(x) - lg)


def _continued_fraction_q(s, x, lg):
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return math.exp(-x + s * math.log(x) - lg) * h


def regularized_lower_gamma(s, x):
    """P(s, x) = gamma_lower(s, x) / Gamma(s) for ``s > 0``, ``x >= 0``."""
    s, x = float(s), float(x)
    if s <= 0.0:
        raise ValueError("s must be positive")
    if x < 0.0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    lg = log_gamma(s)
    if x < s + 1.0:
        return _series_p(s, x, lg)
    return 1.0 - _continued_fraction_q(s, x, lg)


def lower_incomplete_gamma(s, x):
    """Unregularized lower incomplete gamma, integral of t^(s-1) e^-t over [0, x]."""
    s, x = float(s), float(x)
    if s <= 0.0:
        raise ValueError("s must be positive")
    if x < 0.0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return gamma(s)
    lg = log_gamma(s)
    if x < s + 1.0:
        return _series_p(s, x, lg) * gamma(s)
    return gamma(s) - _continued_fraction_q(s, x, lg) * gamma(s)
