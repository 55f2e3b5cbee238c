"""Shared configuration for all attention variants."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class AttentionConfig:
    """Knobs shared by the exact, quadratic-Taylor, and linear paths.

    alpha scales the score denominator alpha * sqrt(d_k); larger alpha
    keeps scores near zero where the truncated exponential is accurate.
    order is the highest retained power of the expansion.  subtract_one
    drops the constant term from both the weights and the normalizer.
    """

    d_k: int = 16
    d_v: int = 16
    alpha: float = 3.0
    order: int = 2
    epsilon: float = 1e-5
    subtract_one: bool = False
    causal: bool = False

    def __post_init__(self):
        if self.d_k < 1 or self.d_v < 1:
            raise ValueError(f"dimensions must be >= 1, got d_k={self.d_k}, d_v={self.d_v}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.order < 0:
            raise ValueError(f"order must be >= 0, got {self.order}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
