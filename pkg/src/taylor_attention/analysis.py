"""Error reports against exact softmax and wall-clock scaling measurements.

Error metrics always use the quadratic oracle to materialize approximate
weight matrices (the linear path never forms them), so accuracy metrics
and performance metrics stay decoupled.  Benchmark slopes are least
squares fits of log(time) against log(n) over the upper half of the size
grid, which skips the sizes dominated by fixed overhead.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, replace
from statistics import median

import numpy as np

from .config import AttentionConfig
from .linalg import Matrix
from .linear import (
    FeatureMap,
    first_order_linear_attention,
    linear_taylor_attention,
    linear_taylor_attention_causal,
    pair_count,
)
from .oracle import (
    MAX_ORACLE_ORDER,
    softmax_attention,
    softmax_weights,
    taylor_attention_quadratic,
    taylor_exp_elementwise,
    taylor_weights_quadratic,
)
from .rng import generate_qkv

_METHOD_PATTERN = re.compile(r"^taylor_(linear|quadratic)_o(\d+)$")

METHOD_LABELS = (
    ["softmax", "first_order_rho"]
    + [f"taylor_linear_o{o}" for o in (0, 1, 2)]
    + [f"taylor_quadratic_o{o}" for o in range(MAX_ORACLE_ORDER + 1)]
)


def _parse_method(label: str) -> tuple[str, int | None]:
    """Split a method label into (family, order); raises on unknown labels."""
    if label in ("softmax", "first_order_rho"):
        return label, None
    m = _METHOD_PATTERN.match(label)
    if m:
        family, order = m.group(1), int(m.group(2))
        if family == "linear" and order in (0, 1, 2):
            return "taylor_linear", order
        if family == "quadratic" and order <= MAX_ORACLE_ORDER:
            return "taylor_quadratic", order
    raise ValueError(f"unknown method {label!r}; valid methods: {', '.join(METHOD_LABELS)}")


def _run_method(label: str, q: Matrix, k: Matrix, v: Matrix, cfg: AttentionConfig) -> tuple[Matrix, int]:
    """Output of one method on (q, k, v); returns (output, effective order)."""
    family, order = _parse_method(label)
    if family == "softmax":
        return softmax_attention(q, k, v, cfg), cfg.order
    if family == "first_order_rho":
        if cfg.causal:
            raise ValueError("first_order_rho has no causal variant")
        return first_order_linear_attention(q, k, v, FeatureMap.ELU_PLUS_ONE), 1
    cfg_o = replace(cfg, order=order)
    if family == "taylor_linear":
        if cfg.causal:
            return linear_taylor_attention_causal(q, k, v, cfg_o), order
        return linear_taylor_attention(q, k, v, cfg_o), order
    return taylor_attention_quadratic(q, k, v, cfg_o)[0], order


def _method_weights(label: str, q: Matrix, k: Matrix, cfg: AttentionConfig) -> Matrix:
    """Normalized weight rows of one method, materialized via the oracle."""
    family, order = _parse_method(label)
    if family == "softmax":
        return softmax_weights(q, k, cfg)
    if family == "first_order_rho":
        qf = FeatureMap.ELU_PLUS_ONE.apply(q)
        kf = FeatureMap.ELU_PLUS_ONE.apply(k)
        raw = qf @ kf.T
        return raw / raw.sum(axis=1, keepdims=True)
    return taylor_weights_quadratic(q, k, replace(cfg, order=order))


@dataclass
class ApproxReport:
    """Error of one method's output/weights against exact softmax attention."""

    method: str
    n: int
    d_k: int
    d_v: int
    alpha: float
    order: int
    max_abs_output_err: float
    mean_abs_output_err: float
    max_row_weight_l1: float
    seed: int


def compare_methods(n: int, cfg: AttentionConfig, seed: int, methods: list[str]) -> list[ApproxReport]:
    """One ApproxReport per method, all against the same seeded (Q, K, V)."""
    if n < 1:
        raise ValueError(f"compare_methods requires n >= 1, got {n}")
    for label in methods:
        _parse_method(label)
    q, k, v = generate_qkv(seed, n, cfg.d_k, cfg.d_v)
    ref_out = softmax_attention(q, k, v, cfg)
    ref_w = softmax_weights(q, k, cfg)
    reports = []
    for label in methods:
        if label == "softmax":
            out, order, w = ref_out, cfg.order, ref_w
        else:
            out, order = _run_method(label, q, k, v, cfg)
            w = _method_weights(label, q, k, cfg)
        err = np.abs(out - ref_out)
        reports.append(
            ApproxReport(
                method=label,
                n=n,
                d_k=cfg.d_k,
                d_v=cfg.d_v,
                alpha=cfg.alpha,
                order=order,
                max_abs_output_err=float(err.max()),
                mean_abs_output_err=float(err.mean()),
                max_row_weight_l1=float(np.abs(w - ref_w).sum(axis=1).max()),
                seed=seed,
            )
        )
    return reports


@dataclass
class CurveTable:
    """Columnar table of exp(x) against its truncations on a uniform grid."""

    columns: list[str]
    values: np.ndarray  # (points, len(columns))


def taylor_curve_data(
    x_min: float, x_max: float, points: int, orders: list[int]
) -> CurveTable:
    """Rows (x, exp(x), one truncation column per requested order)."""
    if not x_min < x_max:
        raise ValueError(f"need x_min < x_max, got [{x_min}, {x_max}]")
    if points < 2:
        raise ValueError(f"need at least 2 points, got {points}")
    for o in orders:
        if o < 0:
            raise ValueError(f"orders must be >= 0, got {o}")
    xs = np.linspace(x_min, x_max, points)
    cols = [xs, np.exp(xs)]
    for o in orders:
        cols.append(taylor_exp_elementwise(xs.reshape(-1, 1), o).ravel())
    return CurveTable(
        columns=["x", "exp"] + [f"order{o}" for o in orders],
        values=np.column_stack(cols),
    )


def summary_float_count(d_k: int, d_v: int) -> int:
    """Floats held by one KvSummary (computed, not measured)."""
    return pair_count(d_k) * (d_v + 1) + d_k * (d_v + 1) + d_v + 1


@dataclass
class BenchRecord:
    """Median wall time of one method at one size, plus the per-method fit."""

    method: str
    n: int
    d_k: int
    d_v: int
    repeats: int
    median_wall_time: float
    loglog_slope: float
    parallel: bool
    summary_floats: int


def _single_thread_limit(parallel: bool):
    """BLAS pinned to one thread unless parallel timing was requested."""
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=None if parallel else 1)


def _fit_upper_half_slope(sizes: list[int], times: list[float]) -> float:
    """Least-squares slope of log(time) vs log(size) over the upper half."""
    half = len(sizes) // 2
    xs = np.log(np.asarray(sizes[half:], dtype=float))
    ys = np.log(np.asarray(times[half:], dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def _time_call(fn, repeats: int) -> float:
    fn()  # warmup outside the timed region
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return median(samples)


def scaling_benchmark(
    n_values: list[int],
    cfg: AttentionConfig,
    repeats: int,
    methods: list[str],
    *,
    seed: int = 0,
    parallel: bool = False,
) -> list[BenchRecord]:
    """Median wall time per (method, n) and a per-method log-log slope in n."""
    if len(n_values) < 4:
        raise ValueError(f"need at least 4 sizes, got {len(n_values)}")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError(f"sizes must be strictly increasing, got {n_values}")
    if n_values[-1] < 8 * n_values[0]:
        raise ValueError(f"max/min size ratio must be >= 8, got {n_values}")
    if repeats < 3:
        raise ValueError(f"need at least 3 repeats, got {repeats}")
    for label in methods:
        _parse_method(label)

    records = []
    with _single_thread_limit(parallel):
        for label in methods:
            times = []
            for n in n_values:
                q, k, v = generate_qkv(seed, n, cfg.d_k, cfg.d_v)
                times.append(_time_call(lambda: _run_method(label, q, k, v, cfg), repeats))
            slope = _fit_upper_half_slope(n_values, times)
            for n, t in zip(n_values, times):
                records.append(
                    BenchRecord(
                        method=label,
                        n=n,
                        d_k=cfg.d_k,
                        d_v=cfg.d_v,
                        repeats=repeats,
                        median_wall_time=t,
                        loglog_slope=slope,
                        parallel=parallel,
                        summary_floats=summary_float_count(cfg.d_k, cfg.d_v),
                    )
                )
    return records


def dk_scaling_benchmark(
    dk_values: list[int],
    n: int,
    cfg: AttentionConfig,
    repeats: int,
    method: str = "taylor_linear_o2",
    *,
    seed: int = 0,
    parallel: bool = False,
) -> list[BenchRecord]:
    """Wall time of one method across d_k at fixed n; slope is vs d_k."""
    if len(dk_values) < 2:
        raise ValueError(f"need at least 2 d_k values, got {len(dk_values)}")
    if any(b <= a for a, b in zip(dk_values, dk_values[1:])):
        raise ValueError(f"d_k values must be strictly increasing, got {dk_values}")
    if repeats < 3:
        raise ValueError(f"need at least 3 repeats, got {repeats}")
    _parse_method(method)

    records = []
    times = []
    with _single_thread_limit(parallel):
        for d_k in dk_values:
            cfg_d = replace(cfg, d_k=d_k)
            q, k, v = generate_qkv(seed, n, d_k, cfg.d_v)
            times.append(_time_call(lambda: _run_method(method, q, k, v, cfg_d), repeats))
    slope = _fit_upper_half_slope(dk_values, times)
    for d_k, t in zip(dk_values, times):
        records.append(
            BenchRecord(
                method=method,
                n=n,
                d_k=d_k,
                d_v=cfg.d_v,
                repeats=repeats,
                median_wall_time=t,
                loglog_slope=slope,
                parallel=parallel,
                summary_floats=summary_float_count(d_k, cfg.d_v),
            )
        )
    return records
