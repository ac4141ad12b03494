"""Bounding-box primitives.

Two box flavors exist and must not be mixed up:

* ``BoundingBox`` — integer pixel boxes. Origin top-left, x = column,
  y = row, 0-based, and *inclusive* on all four edges, so a single pixel is
  (x, y, x, y) and area is (xmax - xmin + 1) * (ymax - ymin + 1). Pascal VOC
  files store these same boxes shifted to 1-based (handled in ``voc``).
* ``RealBox`` — real-valued boxes with half-open semantics, area
  (xmax - xmin) * (ymax - ymin). Used for overlap math (IoU, GIoU) and
  loss computation, where zero-area boxes are legal.

``BoundingBox.to_real()`` converts a pixel box to the continuous box that
covers exactly its pixels, which makes pixel IoU come out as the ratio of
pixel counts.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundingBox:
    """Integer pixel box, 0-based, inclusive edges."""

    xmin: int
    ymin: int
    xmax: int
    ymax: int

    def __post_init__(self) -> None:
        for name in ("xmin", "ymin", "xmax", "ymax"):
            v = getattr(self, name)
            if isinstance(v, bool):
                raise ValueError(f"{name} must be an integer, got {v!r}")
            try:
                object.__setattr__(self, name, operator.index(v))
            except TypeError:
                raise ValueError(f"{name} must be an integer, got {v!r}") from None
        if not (0 <= self.xmin <= self.xmax and 0 <= self.ymin <= self.ymax):
            raise ValueError(f"degenerate pixel box {self}")

    @property
    def width(self) -> int:
        return self.xmax - self.xmin + 1

    @property
    def height(self) -> int:
        return self.ymax - self.ymin + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def to_real(self) -> RealBox:
        return RealBox(float(self.xmin), float(self.ymin), float(self.xmax + 1), float(self.ymax + 1))


@dataclass(frozen=True)
class RealBox:
    """Real-valued box; zero width/height is allowed."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        if not (self.xmin <= self.xmax and self.ymin <= self.ymax):
            raise ValueError(f"degenerate box {self}")

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


def intersection_area(a: RealBox, b: RealBox) -> float:
    w = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    h = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: RealBox, b: RealBox) -> float:
    """Intersection over union; 0 by convention when the union has no area."""
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def giou(a: RealBox, b: RealBox) -> float:
    """Generalized IoU: IoU minus the empty fraction of the enclosing box.

    Defined for disjoint boxes (negative values, approaching -1 as the
    boxes separate); equals IoU when one box contains the other.
    """
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    hull_w = max(a.xmax, b.xmax) - min(a.xmin, b.xmin)
    hull_h = max(a.ymax, b.ymax) - min(a.ymin, b.ymin)
    hull = hull_w * hull_h
    base = inter / union if union > 0.0 else 0.0
    if hull <= 0.0:
        return base
    return base - (hull - union) / hull


def l1_box_loss(a: RealBox, b: RealBox) -> float:
    """Sum of absolute differences over the four coordinates."""
    return (
        abs(a.xmin - b.xmin)
        + abs(a.ymin - b.ymin)
        + abs(a.xmax - b.xmax)
        + abs(a.ymax - b.ymax)
    )
