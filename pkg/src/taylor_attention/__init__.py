"""Linear-time truncated-exponential attention with quadratic oracles.

Exact softmax attention and a configurable-order polynomial oracle (both
materializing the n x n weight matrix) serve as ground truth for the
linear-time path, which replaces the weight matrix with key/value moment
tensors.  Analysis utilities quantify approximation error and verify the
O(n) vs O(n^2) scaling empirically.
"""

from .analysis import (
    ApproxReport,
    BenchRecord,
    CurveTable,
    METHOD_LABELS,
    compare_methods,
    dk_scaling_benchmark,
    scaling_benchmark,
    summary_float_count,
    taylor_curve_data,
)
from .config import AttentionConfig
from .errors import NORMALIZER_GUARD, DegenerateNormalizerError
from .linalg import (
    Matrix,
    as_matrix,
    frobenius_distance,
    layer_norm_rows,
    matmul,
    read_matrix_csv,
    transpose,
    write_matrix_csv,
)
from .linear import (
    FeatureMap,
    KvSummary,
    build_kv_summary,
    first_order_linear_attention,
    linear_taylor_attention,
    linear_taylor_attention_causal,
    pair_count,
    pair_index,
)
from .oracle import (
    WeightDiagnostics,
    scaled_scores,
    softmax_attention,
    softmax_weights,
    taylor_attention_quadratic,
    taylor_exp_elementwise,
    taylor_weights_quadratic,
)
from .rng import RngState, generate_qkv, randn_matrix

__version__ = "0.1.0"

__all__ = [
    "ApproxReport",
    "AttentionConfig",
    "BenchRecord",
    "CurveTable",
    "DegenerateNormalizerError",
    "FeatureMap",
    "KvSummary",
    "Matrix",
    "METHOD_LABELS",
    "NORMALIZER_GUARD",
    "RngState",
    "WeightDiagnostics",
    "as_matrix",
    "build_kv_summary",
    "compare_methods",
    "dk_scaling_benchmark",
    "first_order_linear_attention",
    "frobenius_distance",
    "generate_qkv",
    "layer_norm_rows",
    "linear_taylor_attention",
    "linear_taylor_attention_causal",
    "matmul",
    "pair_count",
    "pair_index",
    "randn_matrix",
    "read_matrix_csv",
    "scaled_scores",
    "scaling_benchmark",
    "softmax_attention",
    "softmax_weights",
    "summary_float_count",
    "taylor_attention_quadratic",
    "taylor_curve_data",
    "taylor_exp_elementwise",
    "taylor_weights_quadratic",
    "transpose",
    "write_matrix_csv",
]
