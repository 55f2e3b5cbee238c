"""Deterministic random matrices from a splitmix64 bit stream.

The generator is pinned down to the bit so that seeded data files can be
reproduced by independent implementations: splitmix64 supplies one 64-bit
word per draw, each word becomes a uniform in (0, 1] from its top 53 bits
(an exact-zero word maps to 2**-53), and consecutive uniform pairs feed
Box-Muller, whose cosine and sine outputs are both consumed in order.

The integer pipeline is exactly portable.  The log feeding Box-Muller is
evaluated with scalar math.log: numpy's SIMD log can differ from libm in
the last ulp, which would silently decouple vectorized output from the
scalar recipe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import Matrix

_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1
_TWO_NEG53 = 2.0**-53


@dataclass
class RngState:
    """splitmix64 state; advances by one increment per uniform drawn."""

    state: int

    def __post_init__(self):
        self.state = int(self.state) & _MASK64


def _uniforms(rng: RngState, count: int) -> np.ndarray:
    """Next `count` uniforms in (0, 1], advancing the state."""
    steps = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(rng.state) + np.uint64(_GOLDEN) * steps
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    u = (z >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
    u[u == 0.0] = _TWO_NEG53
    rng.state = (rng.state + count * _GOLDEN) & _MASK64
    return u


def randn_matrix(rng: RngState, rows: int, cols: int) -> Matrix:
    """i.i.d. standard-normal matrix; empty shapes consume no draws."""
    if rows < 0 or cols < 0:
        raise ValueError(f"randn_matrix: negative shape ({rows}, {cols})")
    count = rows * cols
    if count == 0:
        return np.zeros((rows, cols))
    pairs = (count + 1) // 2
    u = _uniforms(rng, 2 * pairs)
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.array([math.log(v) for v in u1.tolist()]))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(theta)
    out[1::2] = radius * np.sin(theta)
    return out[:count].reshape(rows, cols)


def generate_qkv(seed: int, n: int, d_k: int, d_v: int) -> tuple[Matrix, Matrix, Matrix]:
    """Seeded (Q, K, V) triple drawn from a single stream, in that order."""
    rng = RngState(seed)
    q = randn_matrix(rng, n, d_k)
    k = randn_matrix(rng, n, d_k)
    v = randn_matrix(rng, n, d_v)
    return q, k, v
