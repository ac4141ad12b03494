"""weedlab: plant auto-annotation, detection metrics, and annotation review.

The package covers the data-engineering side of growth-stage weed
detection: an HSV green-masking pipeline that turns greenhouse images into
Pascal VOC boxes, deterministic dataset splitting and statistics, the
loss/matching math of set-prediction detectors, COCO-style AP/AR
evaluation, and an HTTP service for human review of the annotations.
"""

from .assignment import Assignment, EmptyMatrix, hungarian_assign
from .boxes import BoundingBox, RealBox, giou, iou, l1_box_loss
from .losses import (
    DegenerateDistribution,
    DomainError,
    FocalParams,
    LossWeights,
    cross_entropy,
    detr_total_loss,
    focal_loss,
    match_cost,
)
from .taxonomy import (
    ClassLabel,
    InactiveWeek,
    MalformedLabel,
    SpeciesCode,
    Taxonomy,
    TaxonomyError,
    UnknownSpecies,
    build_default_taxonomy,
    load_taxonomy,
    parse_label,
    parse_taxonomy_config,
)

__version__ = "0.1.0"
