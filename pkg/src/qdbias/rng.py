"""Deterministic counter-based random streams for synthetic data.

Every stream is a Philox4x64-10 generator keyed by the 128-bit pair
``(seed, stream_id)``, so draws are a pure function of (seed, stream_id,
position): independent substreams never share state and a scenario can be
regenerated bit-identically from its seed alone.

Raw 64-bit outputs map to floats by fixed, documented rules:

* uniform in [0, 1):  ``u = (x >> 11) * 2.0**-53``
* standard normal:    Box-Muller on uniform pairs,
  ``r = sqrt(-2*ln(1 - u1))``; ``z0 = r*cos(2*pi*u2)``, ``z1 = r*sin(2*pi*u2)``
  (``1 - u1`` keeps the log argument in (0, 1])
* integer in [0, bound):  ``floor(u * bound)``

Frozen first draws for seed=7, stream_id=0 (regression-pinned in the tests):

* ``raw(2)``      -> 16086915834549238692, 5448529601018347655
* ``uniforms(2)`` -> 0.8720734548204873, 0.29536538151378355
* ``normals(2)``  -> -0.570250515347539, 1.9461275500051387
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["CounterRng"]


class CounterRng:
    """One deterministic stream; draws advance the stream's position."""

    def __init__(self, seed: int, stream_id: int = 0):
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must fit in a u64, got {seed}")
        if not 0 <= stream_id < 2**64:
            raise ValueError(f"stream_id must fit in a u64, got {stream_id}")
        self.seed = seed
        self.stream_id = stream_id
        self._bits = np.random.Philox(key=np.array([seed, stream_id], dtype=np.uint64))

    def substream(self, stream_id: int) -> "CounterRng":
        """Fresh independent stream under the same seed."""
        return CounterRng(self.seed, stream_id)

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs."""
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        if n == 0:
            return np.empty(0, dtype=np.uint64)
        out = self._bits.random_raw(n)
        return np.atleast_1d(np.asarray(out, dtype=np.uint64))

    def uniforms(self, n: int) -> np.ndarray:
        return (self.raw(n) >> np.uint64(11)) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = 2.0 * math.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def bernoulli(self, p: float, n: int) -> np.ndarray:
        """``n`` draws in {0, 1} with P(1) = p, as int8."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        return (self.uniforms(n) < p).astype(np.int8)

    def integers(self, bound: int, n: int) -> np.ndarray:
        """``n`` draws uniform over {0, ..., bound-1}."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return np.minimum((self.uniforms(n) * bound).astype(np.int64), bound - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Permutation of range(n) by stable argsort of uniform keys."""
        return np.argsort(self.uniforms(n), kind="stable")
