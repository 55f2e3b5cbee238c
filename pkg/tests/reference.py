"""Independent reference implementations used as test oracles.

Everything here is deliberately written from the definitions with scalar
Python arithmetic (no shared code with the package) so that agreement is
evidence, not tautology.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_next(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output_word)."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, z


def recipe_uniforms(seed: int, count: int) -> list[float]:
    """Uniforms in (0, 1]: top 53 bits of each word, zero mapped to 2**-53."""
    state = seed & MASK64
    out = []
    for _ in range(count):
        state, z = splitmix64_next(state)
        u = (z >> 11) * 2.0**-53
        out.append(u if u != 0.0 else 2.0**-53)
    return out


def recipe_normals(seed: int, count: int) -> list[float]:
    """Box-Muller on consecutive uniform pairs, cosine then sine output."""
    pairs = (count + 1) // 2
    u = recipe_uniforms(seed, 2 * pairs)
    out = []
    for t in range(pairs):
        u1, u2 = u[2 * t], u[2 * t + 1]
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        out.append(r * math.cos(theta))
        out.append(r * math.sin(theta))
    return out[:count]


def brute_layer_norm_row(row: list[float], epsilon: float) -> list[float]:
    mean = sum(row) / len(row)
    var = sum((x - mean) ** 2 for x in row) / len(row)
    scale = math.sqrt(var + epsilon)
    return [(x - mean) / scale for x in row]


def brute_softmax_attention(
    q: list[list[float]],
    k: list[list[float]],
    v: list[list[float]],
    alpha: float,
    epsilon: float,
    causal: bool = False,
) -> list[list[float]]:
    """Softmax attention straight from the definition, scalar arithmetic."""
    d_k = len(q[0])
    qn = [brute_layer_norm_row(row, epsilon) for row in q]
    kn = [brute_layer_norm_row(row, epsilon) for row in k]
    scale = alpha * math.sqrt(d_k)
    out = []
    for i, qi in enumerate(qn):
        visible = range(len(kn)) if not causal else range(min(i + 1, len(kn)))
        scores = [sum(a * b for a, b in zip(qi, kj)) / scale for kj in kn]
        m = max(scores[j] for j in visible)
        exps = {j: math.exp(scores[j] - m) for j in visible}
        total = sum(exps.values())
        row = [0.0] * len(v[0])
        for j in visible:
            w = exps[j] / total
            for c in range(len(v[0])):
                row[c] += w * v[j][c]
        out.append(row)
    return out


def taylor_poly(x: float, order: int) -> float:
    """sum_{p<=order} x**p / p! straight from the definition."""
    return sum(x**p / math.factorial(p) for p in range(order + 1))
