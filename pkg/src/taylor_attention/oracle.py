"""Quadratic-time reference attention with the n x n matrix materialized.

Two references live here: exact softmax attention, and attention whose
exponential is replaced by a truncated Taylor polynomial of configurable
order.  Both run on the same conditioning (row layer norm of Q and K,
scores divided by alpha * sqrt(d_k)) so that the only difference between
them is the exponential approximation itself.  The polynomial path is the
ground truth that the linear-time path must reproduce exactly.

Even truncation orders keep the polynomial positive everywhere (at order
two, 1 + x + x**2/2 >= 1/2 for all real x), while odd orders go negative
for sufficiently negative scores; `WeightDiagnostics` surfaces that.

The attention entry points walk query rows in cache-sized blocks: the
weight matrix is still fully materialized (block by block), but its n x n
working set never spills to RAM, so measured cost stays proportional to
n^2 rather than hitting a cache-to-memory cliff.  Weight-matrix accessors
return the full n x n array and are meant for analysis-scale inputs.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .config import AttentionConfig
from .errors import DegenerateNormalizerError, normalizer_thresholds
from .linalg import Matrix, as_matrix, layer_norm_rows

MAX_ORACLE_ORDER = 8

_BLOCK_BYTES = 2 << 20  # per-block score panel budget


@dataclass
class WeightDiagnostics:
    """Extremes of the pre-normalization weights and their row sums."""

    min_weight: float
    min_row_sum: float
    negative_weight_count: int
    negative_row_sum_count: int


def _check_qk(q: Matrix, k: Matrix, cfg: AttentionConfig) -> None:
    if q.shape[1] != cfg.d_k or k.shape[1] != cfg.d_k:
        raise ValueError(
            f"scaled_scores dimension mismatch: q {q.shape}, k {k.shape}, "
            f"expected {cfg.d_k} columns"
        )


def _check_qkv(q: Matrix, k: Matrix, v: Matrix, cfg: AttentionConfig) -> None:
    _check_qk(q, k, cfg)
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"key/value row mismatch: k {k.shape}, v {v.shape}")
    if v.shape[1] != cfg.d_v:
        raise ValueError(f"value dimension mismatch: v {v.shape}, expected {cfg.d_v} columns")
    if k.shape[0] < 1:
        raise ValueError("attention requires at least one key/value row")


def scaled_scores(q, k, cfg: AttentionConfig, *, pre_normalized: bool = False) -> Matrix:
    """Layer-normed dot-product scores divided by alpha * sqrt(d_k).

    pre_normalized=True is a test hook: it skips the internal layer norm
    and treats q, k as already normalized.
    """
    q = as_matrix(q)
    k = as_matrix(k)
    _check_qk(q, k, cfg)
    if not pre_normalized:
        q = layer_norm_rows(q, cfg.epsilon)
        k = layer_norm_rows(k, cfg.epsilon)
    return (q @ k.T) / (cfg.alpha * np.sqrt(cfg.d_k))


def taylor_exp_elementwise(s, order: int) -> Matrix:
    """Entrywise sum_{p=0}^{order} s**p / p!; order 0 is the ones matrix."""
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    s = as_matrix(s)
    total = np.ones_like(s)
    term = np.ones_like(s)
    for p in range(1, order + 1):
        term = term * s / p
        total = total + term
    return total


def _taylor_poly_inplace(scores: np.ndarray, order: int, work: np.ndarray) -> np.ndarray:
    """Horner form of the same truncated exponential, evaluated into `work`.

    Equivalent to taylor_exp_elementwise up to roundoff; `scores` is left
    intact so the caller's buffer can be reused.
    """
    if order == 0:
        work.fill(1.0)
        return work
    np.multiply(scores, 1.0 / order, out=work)
    work += 1.0
    for p in range(order - 1, 0, -1):
        work *= scores
        work *= 1.0 / p
        work += 1.0
    return work


def _causal_mask(n_rows: int, n_k: int, row_offset: int = 0) -> np.ndarray:
    """Boolean mask, True where key j is hidden from global query row i (j > i)."""
    return np.triu(np.ones((n_rows, n_k), dtype=bool), k=1 + row_offset)


def _visible_counts(n_q: int, n_k: int, causal: bool) -> np.ndarray:
    """Keys each query row aggregates: min(i+1, n_k) under causal masking."""
    if causal:
        return np.minimum(np.arange(1, n_q + 1), n_k)
    return np.full(n_q, n_k)


def _block_rows(n_q: int, n_k: int) -> int:
    return max(16, min(n_q, _BLOCK_BYTES // (8 * max(1, n_k))))


def softmax_weights(q, k, cfg: AttentionConfig, *, pre_normalized: bool = False) -> Matrix:
    """Row-softmax of the scaled scores, fully materialized; rows sum to 1."""
    scores = scaled_scores(q, k, cfg, pre_normalized=pre_normalized)
    if cfg.causal:
        scores = np.where(_causal_mask(*scores.shape), -np.inf, scores)
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


_workspace_local = threading.local()


class _ScoreWorkspace:
    """Reusable buffers for blocked walks over the n x n score matrix.

    Cached per thread and per shape: large mallocs round-trip through
    mmap, and a fresh multi-megabyte workspace on every call can
    dominate mid-size timings.  Every field is overwritten per block.
    """

    def __init__(self, rows: int, n_k: int, causal: bool, extra_float: bool = False):
        self.k_cols = np.arange(n_k) if causal else None
        self.scores = np.empty((rows, n_k))
        self.extra = np.empty((rows, n_k)) if extra_float else None
        self.bools = np.empty((rows, n_k), dtype=bool)

    def hidden(self, start: int, stop: int) -> np.ndarray:
        """In-place causal mask block: True where key j > global row i."""
        block = self.bools[: stop - start]
        np.greater(self.k_cols[None, :], np.arange(start, stop)[:, None], out=block)
        return block


def _score_workspace(rows: int, n_k: int, causal: bool, extra_float: bool) -> _ScoreWorkspace:
    cache = getattr(_workspace_local, "scores", None)
    if cache is None:
        cache = _workspace_local.scores = {}
    key = (rows, n_k, causal, extra_float)
    ws = cache.get(key)
    if ws is None:
        if len(cache) > 64:
            cache.clear()
        ws = cache[key] = _ScoreWorkspace(rows, n_k, causal, extra_float)
    return ws


def softmax_attention(q, k, v, cfg: AttentionConfig, *, pre_normalized: bool = False) -> Matrix:
    """Exact softmax attention on the shared conditioning."""
    q, k, v = as_matrix(q), as_matrix(k), as_matrix(v)
    _check_qkv(q, k, v, cfg)
    if not pre_normalized:
        q = layer_norm_rows(q, cfg.epsilon)
        k = layer_norm_rows(k, cfg.epsilon)
    inv_scale = 1.0 / (cfg.alpha * np.sqrt(cfg.d_k))
    n_q, n_k = q.shape[0], k.shape[0]
    k_t = np.ascontiguousarray(k.T)
    out = np.empty((n_q, v.shape[1]))
    rows = _block_rows(n_q, n_k)
    ws = _score_workspace(min(rows, n_q), n_k, cfg.causal, extra_float=False)
    for start in range(0, n_q, rows):
        stop = min(start + rows, n_q)
        scores = np.matmul(q[start:stop], k_t, out=ws.scores[: stop - start])
        scores *= inv_scale
        if cfg.causal:
            scores[ws.hidden(start, stop)] = -np.inf
        scores -= scores.max(axis=1, keepdims=True)
        np.exp(scores, out=scores)
        np.matmul(scores, v, out=out[start:stop])
        out[start:stop] /= scores.sum(axis=1)[:, None]
    return out


def _taylor_raw_weights(
    q: Matrix, k: Matrix, cfg: AttentionConfig, pre_normalized: bool
) -> tuple[Matrix, np.ndarray | None]:
    """Pre-normalization polynomial weights and the causal mask, if any."""
    if cfg.order > MAX_ORACLE_ORDER:
        raise ValueError(f"oracle supports orders 0..{MAX_ORACLE_ORDER}, got {cfg.order}")
    scores = scaled_scores(q, k, cfg, pre_normalized=pre_normalized)
    weights = taylor_exp_elementwise(scores, cfg.order)
    if cfg.subtract_one:
        weights = weights - 1.0
    mask = None
    if cfg.causal:
        mask = _causal_mask(*weights.shape)
        weights = np.where(mask, 0.0, weights)
    return weights, mask


def taylor_weights_quadratic(q, k, cfg: AttentionConfig, *, pre_normalized: bool = False) -> Matrix:
    """Row-normalized truncated-exponential weights (full n x n)."""
    q, k = as_matrix(q), as_matrix(k)
    _check_qk(q, k, cfg)
    weights, _ = _taylor_raw_weights(q, k, cfg, pre_normalized)
    counts = _visible_counts(weights.shape[0], weights.shape[1], cfg.causal)
    row_sums = weights.sum(axis=1)
    _guard_row_sums(row_sums, counts, "taylor_weights_quadratic")
    return weights / row_sums[:, None]


def _guard_row_sums(row_sums: np.ndarray, counts: np.ndarray, operation: str, offset: int = 0) -> None:
    thresholds = normalizer_thresholds(counts)
    bad = np.abs(row_sums) < thresholds
    if bad.any():
        row = int(np.argmax(bad))
        raise DegenerateNormalizerError(
            operation, offset + row, float(row_sums[row]), float(thresholds[row])
        )


def taylor_attention_quadratic(
    q, k, v, cfg: AttentionConfig, *, pre_normalized: bool = False
) -> tuple[Matrix, WeightDiagnostics]:
    """Quadratic-time truncated-exponential attention plus diagnostics.

    Diagnostics are computed over the pre-normalization weights (masked
    entries excluded under cfg.causal) and their row sums.
    """
    q, k, v = as_matrix(q), as_matrix(k), as_matrix(v)
    _check_qkv(q, k, v, cfg)
    if cfg.order > MAX_ORACLE_ORDER:
        raise ValueError(f"oracle supports orders 0..{MAX_ORACLE_ORDER}, got {cfg.order}")
    if not pre_normalized:
        q = layer_norm_rows(q, cfg.epsilon)
        k = layer_norm_rows(k, cfg.epsilon)
    inv_scale = 1.0 / (cfg.alpha * np.sqrt(cfg.d_k))
    n_q, n_k = q.shape[0], k.shape[0]
    counts = _visible_counts(n_q, n_k, cfg.causal)
    k_t = np.ascontiguousarray(k.T)
    out = np.empty((n_q, v.shape[1]))
    min_weight = np.inf
    min_row_sum = np.inf
    negative_weights = 0
    negative_row_sums = 0
    rows = _block_rows(n_q, n_k)
    ws = _score_workspace(min(rows, n_q), n_k, cfg.causal, extra_float=True)
    for start in range(0, n_q, rows):
        stop = min(start + rows, n_q)
        scores = np.matmul(q[start:stop], k_t, out=ws.scores[: stop - start])
        scores *= inv_scale
        weights = _taylor_poly_inplace(scores, cfg.order, ws.extra[: stop - start])
        if cfg.subtract_one:
            weights -= 1.0
        if cfg.causal:
            hidden = ws.hidden(start, stop)
            visible_min = float(np.min(weights, where=~hidden, initial=np.inf))
            weights[hidden] = 0.0
        else:
            visible_min = float(weights.min())
        min_weight = min(min_weight, visible_min)
        # hidden entries were zeroed, so they cannot count as negative
        negative_weights += int(np.count_nonzero(np.less(weights, 0.0, out=ws.bools[: stop - start])))
        row_sums = weights.sum(axis=1)
        min_row_sum = min(min_row_sum, float(row_sums.min()))
        negative_row_sums += int((row_sums < 0).sum())
        _guard_row_sums(row_sums, counts[start:stop], "taylor_attention_quadratic", offset=start)
        np.matmul(weights, v, out=out[start:stop])
        out[start:stop] /= row_sums[:, None]
    diagnostics = WeightDiagnostics(
        min_weight=min_weight,
        min_row_sum=min_row_sum,
        negative_weight_count=negative_weights,
        negative_row_sum_count=negative_row_sums,
    )
    return out, diagnostics
