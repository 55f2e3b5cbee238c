"""Shared error types and normalizer guards."""

from __future__ import annotations

import numpy as np

NORMALIZER_GUARD = 1e-12
RELATIVE_NORMALIZER_GUARD = 1e-3


def normalizer_thresholds(visible_keys: np.ndarray) -> np.ndarray:
    """Vectorized normalizer_threshold over per-row visible key counts."""
    return np.maximum(NORMALIZER_GUARD, RELATIVE_NORMALIZER_GUARD * visible_keys)


def normalizer_threshold(visible_keys: int) -> float:
    """Minimum |normalizer| for a row that aggregates `visible_keys` keys.

    Truncated-exponential weights sum to about the key count times an O(1)
    factor, so a normalizer far below that is cancellation: the quotient
    it produces carries no significant digits (two algebraically identical
    evaluations disagree wildly).  The guard therefore scales with the key
    count, with an absolute floor for exact degeneracy.  Only reachable
    with subtract_one=true or odd truncation orders.
    """
    return max(NORMALIZER_GUARD, RELATIVE_NORMALIZER_GUARD * visible_keys)


class DegenerateNormalizerError(ValueError):
    """A row normalizer fell below the magnitude guard.

    Surfacing this is more informative than clamping: at order 2 with
    subtract_one=False the normalizer is mathematically >= n/2, so the
    guard is unreachable there and tripping it signals a bug or an
    intentionally degenerate configuration.
    """

    def __init__(self, operation: str, row: int, value: float, threshold: float):
        self.operation = operation
        self.row = row
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"{operation}: degenerate normalizer {value!r} for row {row} "
            f"(|normalizer| < {threshold:g})"
        )
