"""Adversarial criterion as a differentiable scalar.

The walk needs a single scalar whose zero level set is the decision boundary:
strictly negative means adversarial. Targeted form is the margin of the
original class over the target class; untargeted form is the margin of the
original class over its best competitor. Both are logit differences, so value
and gradient come from one reverse pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_vector
from .models import Model, forward, grad_scalar


class GradientMaskingError(RuntimeError):
    """Criterion gradient is exactly zero so no boundary direction exists."""


@dataclass(frozen=True)
class Criterion:
    """Attack goal: leave original_label, optionally by reaching target_label."""

    original_label: int
    target_label: int | None = None

    def __post_init__(self):
        if self.original_label < 0:
            raise ValueError(f"class index must be >= 0, got {self.original_label}")
        if self.target_label is not None:
            if self.target_label < 0:
                raise ValueError(f"class index must be >= 0, got {self.target_label}")
            if self.target_label == self.original_label:
                raise ValueError("target class must differ from the original class")

    def check_classes(self, num_classes: int):
        if self.original_label >= num_classes:
            raise ValueError(f"class {self.original_label} out of range [0, {num_classes})")
        if self.target_label is not None and self.target_label >= num_classes:
            raise ValueError(f"class {self.target_label} out of range [0, {num_classes})")


def _competitor(logits: np.ndarray, exclude: int) -> int:
    """Index of the largest logit outside exclude; ties pick the lowest index."""
    masked = logits.copy()
    masked[exclude] = -np.inf
    return int(np.argmax(masked))


def adv_value(logits, crit: Criterion) -> float:
    """Signed margin from the logits; strictly negative iff adversarial.

    Targeted: logit[y] - logit[t]. Untargeted: min over t != y of the same,
    which is the margin of y over its strongest competitor.
    """
    logits = as_vector(logits)
    if logits.size < 2:
        raise ValueError("need at least 2 logits")
    crit.check_classes(logits.size)
    y = crit.original_label
    t = crit.target_label if crit.target_label is not None else _competitor(logits, y)
    return float(logits[y] - logits[t])


def is_adversarial(logits, crit: Criterion) -> bool:
    """True iff the margin is strictly negative (exact zero is on the boundary)."""
    return adv_value(logits, crit) < 0.0


def adv_value_and_grad(model: Model, x_tilde, crit: Criterion) -> tuple[float, np.ndarray]:
    """Margin and its input gradient in one model query.

    The competitor class is fixed from the forward logits (for the untargeted
    min this is the active branch, hence a valid subgradient); the margin is
    then the scalar (e_y - e_t) . logits and one reverse pass gives its
    gradient. Raises GradientMaskingError if the gradient vanishes exactly.
    """
    x_tilde = as_vector(x_tilde)
    crit.check_classes(model.num_classes)
    y = crit.original_label
    if crit.target_label is not None:
        t = crit.target_label
    else:
        t = _competitor(forward(model, x_tilde), y)
    coeffs = np.zeros(model.num_classes)
    coeffs[y] = 1.0
    coeffs[t] = -1.0
    value, grad = grad_scalar(model, x_tilde, coeffs)
    if not np.any(grad):
        raise GradientMaskingError(
            "criterion gradient is exactly zero; the model gives no boundary direction"
        )
    return value, grad
