"""Counter-based, splittable random streams.

Every random number is a pure function of ``(stream key, counter)``::

    bits(key, i) = fmix(fmix(key ^ (i * C1)) + key)

where ``fmix`` is the SplitMix64 finalizer.  Child streams are derived by
mixing a 64-bit hash of a purpose tag and integer indices into the parent
key, so a replicate's draws never depend on how many replicates run, in what
order, or on how many threads.
"""

import hashlib

import numpy as np

__all__ = ["RngStream", "derive_keys", "uniforms_at", "tag_hash", "as_stream"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


def _fmix(z):
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(x):
    if isinstance(x, np.ndarray):
        return x.astype(np.uint64, copy=False)
    if isinstance(x, (list, tuple, range)):
        return np.asarray([int(v) & _MASK64 for v in x], dtype=np.uint64)
    return np.asarray([int(x) & _MASK64], dtype=np.uint64)


def tag_hash(tag):
    """Stable 64-bit hash of a purpose tag (BLAKE2b, little endian)."""
    digest = hashlib.blake2b(str(tag).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_keys(parent, tag, *indices):
    """Derive child stream keys from ``parent`` for ``tag`` and index arrays.

    Index arguments broadcast against each other; the result has their
    broadcast shape (a 1-element array for scalar input).
    """
    with np.errstate(over="ignore"):
        key = _fmix(_u64(parent) ^ _fmix(_u64(tag_hash(tag))))
        for idx in indices:
            idx = np.asarray(idx)
            idx = idx.astype(np.uint64) if idx.dtype != np.uint64 else idx
            key = _fmix(key ^ _fmix(idx * _C1 + np.uint64(1)))
    return np.atleast_1d(key)


def bits_at(keys, counters):
    keys = _u64(keys)
    counters = np.asarray(counters).astype(np.uint64)
    with np.errstate(over="ignore"):
        return _fmix(_fmix(keys ^ (counters * _C1)) + keys)


def uniforms_at(keys, counters):
    """Uniform doubles in the open interval (0, 1) for broadcast keys/counters."""
    b = bits_at(keys, counters)
    return ((b >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


class RngStream:
    """A single random stream owned by one caller.

    Parameters
    ----------
    master_seed : int
        64-bit unsigned master seed.
    stream_id : int, optional
        Key of this stream.  Defaults to a key derived from the master seed.
    """

    def __init__(self, master_seed, stream_id=None):
        self.master_seed = int(master_seed) & _MASK64
        if stream_id is None:
            stream_id = int(derive_keys(self.master_seed, "root")[0])
        self.stream_id = int(stream_id) & _MASK64
        self.position = 0

    def __repr__(self):
        return (f"RngStream(master_seed={self.master_seed}, "
                f"stream_id={self.stream_id:#018x}, position={self.position})")

    def spawn(self, tag, *indices):
        """Child stream for a purpose tag and scalar indices."""
        key = derive_keys(self.stream_id, tag, *[np.uint64(int(i) & _MASK64) for i in indices])
        return RngStream(self.master_seed, int(key[0]))

    def spawn_keys(self, tag, *indices):
        """Vectorized :meth:`spawn`: keys for arrays of indices."""
        return derive_keys(self.stream_id, tag, *indices)

    def _take(self, n):
        counters = np.arange(self.position, self.position + n, dtype=np.uint64)
        self.position += n
        return counters

    def random(self, n=None):
        size = 1 if n is None else int(n)
        u = uniforms_at(np.uint64(self.stream_id), self._take(size))
        return float(u[0]) if n is None else u

    def exponential(self, n=None):
        size = 1 if n is None else int(n)
        e = -np.log(self.random(size))
        return float(e[0]) if n is None else e

    def normal(self, n=None):
        size = 1 if n is None else int(n)
        pairs = (size + 1) // 2
        u = self.random(2 * pairs).reshape(pairs, 2)
        z = box_muller(u[:, 0], u[:, 1]).reshape(-1)[:size]
        return float(z[0]) if n is None else z


def box_muller(u1, u2):
    """Pairs of independent standard normals from pairs of open uniforms."""
    r = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)


def as_stream(rng):
    """Coerce ``None``, an integer seed or an :class:`RngStream` to a stream."""
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError(f"expected RngStream or integer seed, got {type(rng).__name__}")
