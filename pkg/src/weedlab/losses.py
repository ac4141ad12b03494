"""Reference loss functions for transformer-style set detectors.

These are scalar, value-level implementations used for verification and as
matching costs — no gradients, no batching. The composite detection loss is

    L = alpha_cls * L_cls + beta_bbox * L_bbox + gamma_iou * L_iou

and classification imbalance is handled by the focal loss

    FL(p_t) = -alpha_t * (1 - p_t)^gamma * log(p_t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .boxes import RealBox, giou, l1_box_loss

# Probabilities are floored here before taking logs so matching costs stay
# finite even for hard-zero predicted probabilities.
PROB_FLOOR = 1e-12

_DISTRIBUTION_TOL = 1e-9


class DegenerateDistribution(ValueError):
    """Class probabilities are negative or do not sum to 1."""


class DomainError(ValueError):
    """Scalar argument outside the function's domain."""


@dataclass(frozen=True)
class LossWeights:
    """Weights of the classification, L1-box and IoU loss terms."""

    alpha_cls: float = 1.0
    beta_bbox: float = 5.0
    gamma_iou: float = 2.0

    def __post_init__(self) -> None:
        for name in ("alpha_cls", "beta_bbox", "gamma_iou"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")


@dataclass(frozen=True)
class FocalParams:
    """Balancing factor alpha_t and focusing exponent gamma."""

    alpha_t: float = 0.25
    gamma: float = 2.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha_t <= 1.0):
            raise ValueError(f"alpha_t must lie in [0, 1], got {self.alpha_t!r}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0.0):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma!r}")


def _check_distribution(probabilities: Sequence[float], target: int) -> None:
    if not 0 <= target < len(probabilities):
        raise DomainError(f"target {target} out of range for {len(probabilities)} classes")
    total = math.fsum(probabilities)
    if any(p < 0.0 for p in probabilities) or abs(total - 1.0) > _DISTRIBUTION_TOL:
        raise DegenerateDistribution(f"probabilities sum to {total!r}")


def cross_entropy(probabilities: Sequence[float], target: int) -> float:
    """-log p[target], with p floored at PROB_FLOOR to avoid infinities."""
    _check_distribution(probabilities, target)
    return -math.log(max(probabilities[target], PROB_FLOOR))


def focal_loss(p_t: float, params: FocalParams = FocalParams()) -> float:
    """Focal loss of the target-class probability p_t in (0, 1]."""
    if not (0.0 < p_t <= 1.0):
        raise DomainError(f"p_t must lie in (0, 1], got {p_t!r}")
    return -params.alpha_t * (1.0 - p_t) ** params.gamma * math.log(p_t)


def detr_total_loss(l_cls: float, l_bbox: float, l_iou: float, weights: LossWeights = LossWeights()) -> float:
    """Weighted sum of the three detection loss components."""
    for v in (l_cls, l_bbox, l_iou):
        if not math.isfinite(v):
            raise DomainError(f"loss component must be finite, got {v!r}")
    return weights.alpha_cls * l_cls + weights.beta_bbox * l_bbox + weights.gamma_iou * l_iou


def match_cost(
    class_probabilities: Sequence[float],
    predicted_box: RealBox,
    gt_class: int,
    gt_box: RealBox,
    weights: LossWeights = LossWeights(),
) -> float:
    """Cost of pairing one prediction with one ground truth.

    alpha_cls * (-log p[gt_class]) + beta_bbox * L1(box) + gamma_iou * (1 - GIoU).
    Finite for all valid inputs, so cost matrices built from it are always
    solvable by the assignment step.
    """
    _check_distribution(class_probabilities, gt_class)
    cls_term = -math.log(max(class_probabilities[gt_class], PROB_FLOOR))
    return (
        weights.alpha_cls * cls_term
        + weights.beta_bbox * l1_box_loss(predicted_box, gt_box)
        + weights.gamma_iou * (1.0 - giou(predicted_box, gt_box))
    )
