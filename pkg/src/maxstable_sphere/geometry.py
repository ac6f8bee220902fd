"""Spherical primitives: unit vectors, Rodrigues rotations, the von Mises-Fisher
density on S^2 and Fibonacci quadrature grids."""

import math
from dataclasses import dataclass, field

import numpy as np

from ._checks import check_finite, check_interval, check_points, check_positive_int
from .rng import as_stream, box_muller

__all__ = [
    "UnitVec3",
    "Rotation",
    "VmfParams",
    "SphericalGrid",
    "KAPPA_MAX",
    "rodrigues_matrix",
    "vmf_density",
    "vmf_density_array",
    "vmf_coefficient",
    "vmf_sup",
    "vmf_inf",
    "fibonacci_grid",
    "uniform_sphere_sample",
    "uniform_sphere_samples",
    "dot3",
]

KAPPA_MAX = 10.0
_KAPPA_UNIFORM = 1e-8
_INV_4PI = 1.0 / (4.0 * math.pi)


@dataclass(frozen=True)
class UnitVec3:
    """A point of S^2.  Coordinates are normalized at construction."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        x, y, z = (check_finite(float(c), "coordinate") for c in (self.x, self.y, self.z))
        n = math.sqrt(x * x + y * y + z * z)
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        object.__setattr__(self, "x", x / n)
        object.__setattr__(self, "y", y / n)
        object.__setattr__(self, "z", z / n)

    @classmethod
    def from_array(cls, v):
        v = np.asarray(v, dtype=float).reshape(3)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    def __neg__(self):
        return UnitVec3(-self.x, -self.y, -self.z)

    def __iter__(self):
        return iter((self.x, self.y, self.z))


def _as_unit_array(v, name="vector"):
    return check_points(v, name)[0]


def dot3(points, centers):
    """Pairwise dot products ``centers @ points.T`` evaluated elementwise.

    Written out coordinate by coordinate so the rounding does not depend on
    array shapes or BLAS kernels.  Returns shape (len(centers), len(points)).
    """
    p = np.asarray(points, dtype=float)
    c = np.asarray(centers, dtype=float)
    out = c[:, 0:1] * p[None, :, 0]
    tmp = c[:, 1:2] * p[None, :, 1]
    out += tmp
    np.multiply(c[:, 2:3], p[None, :, 2], out=tmp)
    out += tmp
    return out


@dataclass(frozen=True, eq=False)
class Rotation:
    """Rotation by ``theta`` radians about ``axis`` (right-hand rule)."""

    theta: float
    axis: UnitVec3
    matrix: np.ndarray = field(repr=False, default=None)

    def apply(self, points):
        """Rotate a single vector or an (n, 3) array of row vectors."""
        arr = np.asarray(points.as_array() if hasattr(points, "as_array") else points, dtype=float)
        return _apply_rows(self.matrix, arr)

    def apply_transpose(self, points):
        arr = np.asarray(points.as_array() if hasattr(points, "as_array") else points, dtype=float)
        return _apply_rows(self.matrix.T, arr)

    def compose(self, other):
        """Matrix of ``self`` followed by ``other`` (``other.matrix @ self.matrix``)."""
        return other.matrix @ self.matrix

    @property
    def T(self):
        return self.matrix.T


def _apply_rows(m, arr):
    single = arr.ndim == 1
    a = arr[None, :] if single else arr
    out = np.empty_like(a, dtype=float)
    for i in range(3):
        out[:, i] = m[i, 0] * a[:, 0] + m[i, 1] * a[:, 1] + m[i, 2] * a[:, 2]
    return out[0] if single else out


def rodrigues_matrix(theta, axis):
    """Rodrigues rotation ``cos t I + sin t [u]_x + (1 - cos t) u u^T``.

    Parameters
    ----------
    theta : float
        Angle in radians.
    axis : UnitVec3 or array-like of shape (3,)
        Rotation axis (normalized if needed).

    Returns
    -------
    Rotation
    """
    theta = check_finite(theta, "theta")
    if not isinstance(axis, UnitVec3):
        axis = UnitVec3.from_array(axis)
    ux, uy, uz = axis.x, axis.y, axis.z
    c, s = math.cos(theta), math.sin(theta)
    k = 1.0 - c
    cross = np.array([[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]])
    outer = np.array([[ux * ux, ux * uy, ux * uz],
                      [uy * ux, uy * uy, uy * uz],
                      [uz * ux, uz * uy, uz * uz]])
    m = c * np.eye(3) + s * cross + k * outer
    m.setflags(write=False)
    return Rotation(theta, axis, m)


@dataclass(frozen=True)
class VmfParams:
    mu: UnitVec3
    kappa: float
    kappa_max: float = KAPPA_MAX

    def __post_init__(self):
        if not isinstance(self.mu, UnitVec3):
            object.__setattr__(self, "mu", UnitVec3.from_array(self.mu))
        check_interval(self.kappa, "kappa", 0.0, self.kappa_max)
        object.__setattr__(self, "kappa", float(self.kappa))


def vmf_coefficient(kappa):
    """Density value at the mean direction, ``kappa / (2 pi (1 - exp(-2 kappa)))``.

    Uses the uniform limit ``1 / (4 pi)`` below 1e-8.
    """
    if kappa < _KAPPA_UNIFORM:
        return _INV_4PI
    return kappa / (2.0 * math.pi * -math.expm1(-2.0 * kappa))


def vmf_density_array(points, centers, kappa):
    """Densities f(x; mu, kappa) for every (center, point) pair.

    Returns an array of shape (len(centers), len(points)).  The cosine is
    clipped to [-1, 1] so values always lie in ``[vmf_inf, vmf_sup]``.
    """
    coef = vmf_coefficient(kappa)
    if kappa < _KAPPA_UNIFORM:
        return np.full((len(centers), len(points)), coef)
    t = dot3(points, centers)
    np.clip(t, -1.0, 1.0, out=t)
    t -= 1.0
    t *= kappa
    np.exp(t, out=t)
    t *= coef
    return t


def vmf_density(x, p):
    """von Mises-Fisher density at ``x`` with mean direction ``p.mu`` and
    concentration ``p.kappa``."""
    xa = _as_unit_array(x, "x")
    return float(vmf_density_array(xa[None, :], p.mu.as_array()[None, :], p.kappa)[0, 0])


def _kappa_of(p):
    return p.kappa if isinstance(p, VmfParams) else float(p)


def vmf_sup(p):
    """Maximum of the density over S^2 (attained at the mean direction)."""
    return vmf_coefficient(_kappa_of(p))


def vmf_inf(p):
    """Minimum of the density over S^2 (attained at the antipode of the mean)."""
    kappa = _kappa_of(p)
    if kappa < _KAPPA_UNIFORM:
        return _INV_4PI
    # same exp kernel as vmf_density_array so the bound is attained bit for bit
    return float(vmf_coefficient(kappa) * np.exp(np.array([-2.0 * kappa]))[0])


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Quadrature nodes on S^2 with positive weights summing to 4 pi."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = check_points(self.nodes, "nodes")
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(nodes) < 1 or len(weights) != len(nodes):
            raise ValueError("grid needs >= 1 node and one weight per node")
        if np.any(weights <= 0.0):
            raise ValueError("grid weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.nodes)

    def as_array(self):
        return self.nodes

    def integrate(self, values):
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))


def fibonacci_grid(n):
    """Fibonacci lattice with ``n`` nodes and equal weights ``4 pi / n``."""
    n = check_positive_int(n, "n")
    i = np.arange(n, dtype=float) + 0.5
    polar = np.arccos(1.0 - 2.0 * i / n)
    golden = (1.0 + 5.0 ** 0.5) / 2.0
    azimuth = 2.0 * np.pi * i / golden
    nodes = np.column_stack([np.cos(azimuth) * np.sin(polar),
                             np.sin(azimuth) * np.sin(polar),
                             np.cos(polar)])
    return SphericalGrid(nodes, np.full(n, 4.0 * np.pi / n))


def normals_to_sphere(u):
    """Unit vectors from uniforms of shape (..., 4) via normalized Gaussian triples."""
    g = box_muller(u[..., 0::2], u[..., 1::2])  # (..., 2, 2)
    g = g.reshape(*u.shape[:-1], 4)[..., :3]
    return g / np.sqrt(g[..., 0] ** 2 + g[..., 1] ** 2 + g[..., 2] ** 2)[..., None]


def uniform_sphere_samples(rng, n):
    """``n`` uniform points of S^2 as an (n, 3) array."""
    rng = as_stream(rng)
    return normals_to_sphere(rng.random(4 * int(n)).reshape(-1, 4))


def uniform_sphere_sample(rng):
    """One uniform point of S^2."""
    return UnitVec3.from_array(uniform_sphere_samples(rng, 1)[0])
