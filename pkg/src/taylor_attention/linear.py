"""Linear-time Taylor attention: moment tensors replace the n x n matrix.

With scores s_ij = q_i . k_j / (alpha sqrt(d_k)) and the exponential
truncated at order two, expanding the square term multinomially turns each
output row into a ratio of query-side contractions against key/value sums
that are accumulated once:

    numerator_i   = t0 + c1 * sum_m q_i^m t1[m]
                       + c2 * sum_{m,l} q_i^m q_i^l t2[m,l]
    denominator_i = n  + c1 * sum_m q_i^m z1[m]
                       + c2 * sum_{m,l} q_i^m q_i^l z2[m,l]

where c1 = 1/(alpha sqrt(d_k)), c2 = 1/(2 alpha^2 d_k), t1[m] = sum_j
k_j^m v_j, t2[m,l] = sum_j k_j^m k_j^l v_j, and z1/z2 are the same sums
without v.  Total cost is Theta(n d_k^2 d_v); the n x n matrix is never
formed.  t2 and z2 are symmetric in (m, l), so only the upper triangle is
stored and off-diagonal contractions are counted twice.

Both passes are evaluated as one feature-times-moments product: rows are
lifted to stacked features [1, x, upper-triangle pairs of x] and hit a
moment matrix [t0|n; c1 (t1|z1); c2 doubled (t2|z2)], blocked so each
feature panel stays cache-resident; materializing n x pairs panels in
RAM would make measured cost track memory bandwidth, not arithmetic.

The causal variant folds each (k_j, v_j) pair into the running summary
before evaluating row j, which makes row i depend on keys j <= i only.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import AttentionConfig
from .errors import NORMALIZER_GUARD, DegenerateNormalizerError, normalizer_threshold
from .linalg import Matrix, as_matrix, layer_norm_rows

LINEAR_ORDERS = (0, 1, 2)

_BLOCK_BYTES = 2 << 20  # per-block feature panel budget


def pair_count(d_k: int) -> int:
    return d_k * (d_k + 1) // 2


def pair_index(d_k: int, m: int, l: int) -> int:
    """Position of the (m, l) pair, m <= l, in row-major upper-triangle order."""
    if not 0 <= m <= l < d_k:
        raise ValueError(f"invalid pair ({m}, {l}) for d_k={d_k}")
    return m * d_k - m * (m - 1) // 2 + (l - m)


@lru_cache(maxsize=None)
def _upper_pairs(d_k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cached (iu0, iu1, doubling) for the upper triangle; treat as read-only."""
    iu0, iu1 = np.triu_indices(d_k)
    doubling = np.where(iu0 == iu1, 1.0, 2.0)
    return iu0, iu1, doubling


def _panel_height(d_k: int, order: int) -> int:
    return 1 + (d_k if order >= 1 else 0) + (pair_count(d_k) if order >= 2 else 0)


_workspace_local = threading.local()


class _PanelWorkspace:
    """Reusable buffers for one block width.

    Fresh multi-megabyte allocations can dominate timings (large mallocs
    round-trip through mmap), so workspaces are cached per thread and
    per shape; every field is fully overwritten on fill.  Row 0 of the
    panel is the constant feature and never changes.
    """

    def __init__(self, d_k: int, order: int, width: int):
        self.d_k = d_k
        self.order = order
        self.panel = np.empty((_panel_height(d_k, order), width))
        self.panel[0] = 1.0
        self.xt = np.empty((d_k, width))
        self.gather = np.empty((pair_count(d_k), width)) if order >= 2 else None

    def fill(self, rows: Matrix) -> np.ndarray:
        """Stacked features [1, x, upper-triangle pairs of x], transposed.

        The transposed layout keeps each pair gather a contiguous row
        copy instead of a strided per-row walk.
        """
        d_k = self.d_k
        self.xt[:] = rows.T
        if self.order >= 1:
            self.panel[1 : 1 + d_k] = self.xt
        if self.order >= 2:
            iu0, iu1, _ = _upper_pairs(d_k)
            np.take(self.xt, iu0, axis=0, out=self.panel[1 + d_k :])
            np.take(self.xt, iu1, axis=0, out=self.gather)
            self.panel[1 + d_k :] *= self.gather
        return self.panel


def _block_rows(n: int, panel_height: int) -> int:
    return max(16, min(n, _BLOCK_BYTES // (8 * max(1, panel_height))))


def _block_spans(n: int, width: int) -> list[tuple[int, int]]:
    return [(start, min(start + width, n)) for start in range(0, n, width)]


def _panel_workspace(d_k: int, order: int, width: int) -> _PanelWorkspace:
    cache = getattr(_workspace_local, "panels", None)
    if cache is None:
        cache = _workspace_local.panels = {}
    key = (d_k, order, width)
    ws = cache.get(key)
    if ws is None:
        if len(cache) > 64:
            cache.clear()
        ws = cache[key] = _PanelWorkspace(d_k, order, width)
    return ws


@dataclass
class KvSummary:
    """Key/value moment sums replacing the explicit attention matrix.

    t0 = sum_j v_j, t1[m] = sum_j k_j^m v_j, t2[(m,l)] = sum_j k_j^m k_j^l v_j,
    z1[m] = sum_j k_j^m, z2[(m,l)] = sum_j k_j^m k_j^l; t2/z2 hold the upper
    triangle (m <= l) in row-major pair order.
    """

    n: int
    t0: np.ndarray  # (d_v,)
    t1: np.ndarray  # (d_k, d_v)
    t2: np.ndarray  # (pair_count(d_k), d_v)
    z1: np.ndarray  # (d_k,)
    z2: np.ndarray  # (pair_count(d_k),)

    @property
    def d_k(self) -> int:
        return self.t1.shape[0]

    @property
    def d_v(self) -> int:
        return self.t1.shape[1]

    @classmethod
    def zeros(cls, d_k: int, d_v: int) -> "KvSummary":
        p = pair_count(d_k)
        return cls(
            n=0,
            t0=np.zeros(d_v),
            t1=np.zeros((d_k, d_v)),
            t2=np.zeros((p, d_v)),
            z1=np.zeros(d_k),
            z2=np.zeros(p),
        )

    def accumulate(self, k_row: np.ndarray, v_row: np.ndarray) -> None:
        """Fold one (k, v) pair into the summary, in place."""
        iu0, iu1, _ = _upper_pairs(self.d_k)
        pair = k_row[iu0] * k_row[iu1]
        self.n += 1
        self.t0 += v_row
        self.t1 += np.outer(k_row, v_row)
        self.t2 += np.outer(pair, v_row)
        self.z1 += k_row
        self.z2 += pair

    def __add__(self, other: "KvSummary") -> "KvSummary":
        if (self.d_k, self.d_v) != (other.d_k, other.d_v):
            raise ValueError("cannot add summaries with different dimensions")
        return KvSummary(
            n=self.n + other.n,
            t0=self.t0 + other.t0,
            t1=self.t1 + other.t1,
            t2=self.t2 + other.t2,
            z1=self.z1 + other.z1,
            z2=self.z2 + other.z2,
        )


def build_kv_summary(k_tilde, v) -> KvSummary:
    """One blocked pass over already-normalized keys and raw values."""
    k_tilde = as_matrix(k_tilde)
    v = as_matrix(v)
    if k_tilde.shape[0] != v.shape[0]:
        raise ValueError(f"build_kv_summary row mismatch: k {k_tilde.shape}, v {v.shape}")
    n, d_k = k_tilde.shape
    d_v = v.shape[1]
    height = _panel_height(d_k, order=2)
    moments = np.zeros((height, d_v + 1))
    v_aug = np.empty((n, d_v + 1))
    v_aug[:, :d_v] = v
    v_aug[:, d_v] = 1.0
    spans = _block_spans(n, _block_rows(n, height))
    for start, stop in spans:
        panel = _panel_workspace(d_k, 2, stop - start).fill(k_tilde[start:stop])
        moments += panel @ v_aug[start:stop]
    return KvSummary(
        n=n,
        t0=moments[0, :d_v].copy(),
        t1=moments[1 : 1 + d_k, :d_v].copy(),
        t2=moments[1 + d_k :, :d_v].copy(),
        z1=moments[1 : 1 + d_k, d_v].copy(),
        z2=moments[1 + d_k :, d_v].copy(),
    )


def _moment_stack(summary: KvSummary, cfg: AttentionConfig) -> np.ndarray:
    """Moments shaped to meet the feature panel: (height) x (d_v + 1)."""
    d_k, d_v = summary.d_k, summary.d_v
    c1 = 1.0 / (cfg.alpha * np.sqrt(d_k))
    c2 = 1.0 / (2.0 * cfg.alpha**2 * d_k)
    height = 1 + (d_k if cfg.order >= 1 else 0) + (pair_count(d_k) if cfg.order >= 2 else 0)
    stack = np.zeros((height, d_v + 1))
    if not cfg.subtract_one:
        stack[0, :d_v] = summary.t0
        stack[0, d_v] = float(summary.n)
    if cfg.order >= 1:
        stack[1 : 1 + d_k, :d_v] = c1 * summary.t1
        stack[1 : 1 + d_k, d_v] = c1 * summary.z1
    if cfg.order >= 2:
        _, _, doubling = _upper_pairs(d_k)
        stack[1 + d_k :, :d_v] = (c2 * doubling)[:, None] * summary.t2
        stack[1 + d_k :, d_v] = (c2 * doubling) * summary.z2
    return stack


def _evaluate_queries(
    q_tilde: Matrix,
    summary: KvSummary,
    cfg: AttentionConfig,
    operation: str,
    row_offset: int = 0,
) -> Matrix:
    """Blocked numerator/denominator contractions for each query row."""
    n_q = q_tilde.shape[0]
    d_v = summary.d_v
    moments = _moment_stack(summary, cfg)
    threshold = normalizer_threshold(summary.n)
    out = np.empty((n_q, d_v))
    spans = _block_spans(n_q, _block_rows(n_q, moments.shape[0]))
    contracted = np.empty((spans[0][1] - spans[0][0], d_v + 1)) if spans else None
    for start, stop in spans:
        panel = _panel_workspace(summary.d_k, cfg.order, stop - start).fill(q_tilde[start:stop])
        block = np.matmul(panel.T, moments, out=contracted[: stop - start])
        denom = block[:, d_v]
        bad = np.abs(denom) < threshold
        if bad.any():
            row = int(np.argmax(bad))
            raise DegenerateNormalizerError(
                operation, row_offset + start + row, float(denom[row]), threshold
            )
        out[start:stop] = block[:, :d_v] / denom[:, None]
    return out


def _check_linear(q: Matrix, k: Matrix, v: Matrix, cfg: AttentionConfig, operation: str) -> None:
    if cfg.order not in LINEAR_ORDERS:
        raise ValueError(f"{operation} supports orders {LINEAR_ORDERS}, got {cfg.order}")
    if q.shape[1] != cfg.d_k or k.shape[1] != cfg.d_k:
        raise ValueError(
            f"{operation} dimension mismatch: q {q.shape}, k {k.shape}, expected {cfg.d_k} columns"
        )
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"{operation} key/value row mismatch: k {k.shape}, v {v.shape}")
    if v.shape[1] != cfg.d_v:
        raise ValueError(f"{operation} value dimension mismatch: v {v.shape}, expected {cfg.d_v}")
    if k.shape[0] < 1:
        raise ValueError(f"{operation} requires at least one key/value row")


def linear_taylor_attention(
    q, k, v, cfg: AttentionConfig, *, pre_normalized: bool = False
) -> Matrix:
    """Truncated-exponential attention in Theta(n d_k^2 d_v).

    Matches taylor_attention_quadratic on the same config (causal=False):
    the contraction re-ordering is algebraically exact.  pre_normalized
    is a test hook that skips the internal layer norm.
    """
    q, k, v = as_matrix(q), as_matrix(k), as_matrix(v)
    _check_linear(q, k, v, cfg, "linear_taylor_attention")
    if cfg.causal:
        raise ValueError(
            "linear_taylor_attention: use linear_taylor_attention_causal for causal configs"
        )
    if not pre_normalized:
        q = layer_norm_rows(q, cfg.epsilon)
        k = layer_norm_rows(k, cfg.epsilon)
    summary = build_kv_summary(k, v)
    return _evaluate_queries(q, summary, cfg, "linear_taylor_attention")


def linear_taylor_attention_causal(
    q, k, v, cfg: AttentionConfig, *, pre_normalized: bool = False
) -> Matrix:
    """Streaming causal variant: row i sees keys j <= i, still Theta(n d_k^2 d_v)."""
    q, k, v = as_matrix(q), as_matrix(k), as_matrix(v)
    _check_linear(q, k, v, cfg, "linear_taylor_attention_causal")
    if q.shape[0] != k.shape[0]:
        raise ValueError(
            f"linear_taylor_attention_causal row mismatch: q {q.shape}, k {k.shape}"
        )
    if not pre_normalized:
        q = layer_norm_rows(q, cfg.epsilon)
        k = layer_norm_rows(k, cfg.epsilon)
    summary = KvSummary.zeros(cfg.d_k, cfg.d_v)
    out = np.empty((q.shape[0], cfg.d_v))
    for i in range(q.shape[0]):
        summary.accumulate(k[i], v[i])
        out[i] = _evaluate_queries(
            q[i : i + 1], summary, cfg, "linear_taylor_attention_causal", row_offset=i
        )[0]
    return out


class FeatureMap(enum.Enum):
    """Positive elementwise maps for first-order linear attention."""

    ELU_PLUS_ONE = "elu_plus_one"
    IDENTITY_POSITIVE_CLIP = "identity_positive_clip"

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self is FeatureMap.ELU_PLUS_ONE:
            # x + 1 for x >= 0, exp(x) for x < 0; always > 0
            return np.where(x >= 0.0, x + 1.0, np.exp(np.minimum(x, 0.0)))
        return np.maximum(x, 0.0)


def first_order_linear_attention(q, k, v, fmap: FeatureMap = FeatureMap.ELU_PLUS_ONE) -> Matrix:
    """Prior-style linear attention: rho(Q) (rho(K)^T V) / (rho(Q) sum rho(K)).

    Deliberately skips layer norm and the alpha scale; this is the
    first-order baseline the truncated-exponential path improves on.
    Cost is Theta(n d_k d_v).
    """
    q, k, v = as_matrix(q), as_matrix(k), as_matrix(v)
    if q.shape[1] != k.shape[1]:
        raise ValueError(f"first_order_linear_attention dimension mismatch: q {q.shape}, k {k.shape}")
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"first_order_linear_attention row mismatch: k {k.shape}, v {v.shape}")
    if k.shape[0] < 1:
        raise ValueError("first_order_linear_attention requires at least one key/value row")
    qf = fmap.apply(q)
    kf = fmap.apply(k)
    numer = qf @ (kf.T @ v)
    denom = qf @ kf.sum(axis=0)
    bad = np.abs(denom) < NORMALIZER_GUARD
    if bad.any():
        row = int(np.argmax(bad))
        raise DegenerateNormalizerError(
            "first_order_linear_attention", row, float(denom[row]), NORMALIZER_GUARD
        )
    return numer / denom[:, None]
