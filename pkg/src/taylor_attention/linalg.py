"""Dense float64 matrix primitives shared by every attention variant.

A "matrix" throughout this package is a plain C-contiguous numpy array of
shape (rows, cols) and dtype float64.  The helpers here validate shapes,
keep reductions deterministic for a fixed platform and thread count, and
define the on-disk CSV format for matrices (one row per line, entries as
the shortest decimal that round-trips to the same float64, no header).
"""

from __future__ import annotations

import numpy as np

Matrix = np.ndarray


def as_matrix(x) -> Matrix:
    """Coerce array-like input to a C-contiguous 2-D float64 array."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return np.ascontiguousarray(m)


def matmul(a, b) -> Matrix:
    """Standard matrix product with an explicit shape check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def transpose(a) -> Matrix:
    return np.ascontiguousarray(as_matrix(a).T)


def layer_norm_rows(m, epsilon: float = 1e-5) -> Matrix:
    """Standardize each row to zero mean and unit (biased) variance.

    No learned scale or shift is applied.  epsilon is added to the
    variance inside the square root, so a constant row maps to zeros
    instead of dividing by zero.
    """
    m = as_matrix(m)
    if epsilon <= 0:
        raise ValueError(f"layer_norm_rows: epsilon must be > 0, got {epsilon}")
    if m.shape[1] < 1:
        raise ValueError("layer_norm_rows: matrix must have at least one column")
    if not np.isfinite(m).all():
        raise ValueError("layer_norm_rows: input contains non-finite entries")
    mean = m.mean(axis=1, keepdims=True)
    var = m.var(axis=1, keepdims=True)  # biased: divide by cols
    return (m - mean) / np.sqrt(var + epsilon)


def frobenius_distance(a, b) -> float:
    """sqrt of the sum of squared entry differences."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"frobenius_distance shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def format_float(x: float) -> str:
    """Shortest decimal string that parses back to the same float64."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def write_matrix_csv(m, path) -> None:
    m = as_matrix(m)
    with open(path, "w", newline="\n") as fh:
        for row in m:
            fh.write(",".join(format_float(x) for x in row))
            fh.write("\n")


def read_matrix_csv(path) -> Matrix:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        return np.zeros((0, 0))
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"ragged matrix CSV in {path}")
    return np.asarray(rows, dtype=np.float64)
