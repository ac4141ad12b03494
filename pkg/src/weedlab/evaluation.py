"""Detection evaluation: greedy matching, PR curves, AP/AR, mAP/mAR.

The protocol is the COCO-style one:

* detections are matched per image and class in descending score order
  (ties by ingestion order), each taking the unmatched ground truth with
  the highest IoU at or above the threshold; leftovers are false
  positives, unmatched ground truths false negatives;
* at most ``max_detections`` detections per image and class participate;
* the PR curve pools all of a class's detections across images, ranked by
  score, and AP is the area under the precision envelope (or the mean of
  the envelope sampled at 101 recall points);
* class AP/AR are means over the IoU threshold ladder; mAP/mAR average the
  classes that have at least one ground-truth instance. Classes without
  ground truths report None and never dilute the means.

Pixel boxes are converted to half-open real boxes once on ingestion, so
IoU is exactly the ratio of pixel counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Mapping, Sequence

from .boxes import RealBox, iou
from .datasets import Detection
from .taxonomy import Taxonomy
from .voc import Annotation

DEFAULT_IOU_LADDER = tuple(i / 100 for i in range(50, 100, 5))

AP_MODES = ("interpolated-101", "exact-integral")


class AllClassesEmpty(ValueError):
    """Every class is a zero-ground-truth sentinel; no mean exists."""


class UnknownImageId(ValueError):
    """A detection references an image absent from the ground truth set."""


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple[float, ...] = DEFAULT_IOU_LADDER
    max_detections: int = 100
    ap_mode: str = "interpolated-101"

    def __post_init__(self) -> None:
        t = tuple(self.iou_thresholds)
        object.__setattr__(self, "iou_thresholds", t)
        if not t:
            raise ValueError("need at least one IoU threshold")
        if any(not (0.0 < x <= 1.0) for x in t):
            raise ValueError(f"thresholds must lie in (0, 1], got {t}")
        if any(a >= b for a, b in zip(t, t[1:])):
            raise ValueError(f"thresholds must be strictly increasing, got {t}")
        if self.max_detections < 1:
            raise ValueError("max_detections must be >= 1")
        if self.ap_mode not in AP_MODES:
            raise ValueError(f"ap_mode must be one of {AP_MODES}, got {self.ap_mode!r}")


def parse_threshold_ladder(text: str) -> tuple[float, ...]:
    """Parse a LO:HI:STEP ladder spec (inclusive endpoints), e.g. 0.5:0.95:0.05."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected LO:HI:STEP, got {text!r}")
    try:
        lo, hi, step = (Decimal(p) for p in parts)
    except InvalidOperation:
        raise ValueError(f"expected numeric LO:HI:STEP, got {text!r}") from None
    if step <= 0 or lo > hi:
        raise ValueError(f"bad ladder {text!r}")
    values = []
    current = lo
    while current <= hi:
        values.append(float(current))
        current += step
    return tuple(values)


@dataclass(frozen=True)
class MatchOutcome:
    """Per-detection TP flags and per-ground-truth matched flags at one threshold."""

    det_is_tp: tuple[bool, ...]
    gt_matched: tuple[bool, ...]

    @property
    def tp(self) -> int:
        return sum(self.det_is_tp)

    @property
    def fp(self) -> int:
        return len(self.det_is_tp) - self.tp

    @property
    def fn(self) -> int:
        return len(self.gt_matched) - sum(self.gt_matched)


def match_detections(
    detections: Sequence[RealBox], ground_truths: Sequence[RealBox], threshold: float
) -> MatchOutcome:
    """Greedily match score-ranked detections of one image and class.

    ``detections`` must already be in match order (descending score, ties
    by ingestion order) and capped; each takes the unmatched ground truth
    with the highest IoU >= threshold (ties: lowest ground-truth index).
    """
    matched = [False] * len(ground_truths)
    flags = []
    for det_box in detections:
        best_iou = -1.0
        best_gt = -1
        for g, gt_box in enumerate(ground_truths):
            if matched[g]:
                continue
            overlap = iou(det_box, gt_box)
            if overlap >= threshold and overlap > best_iou:
                best_iou = overlap
                best_gt = g
        if best_gt >= 0:
            matched[best_gt] = True
            flags.append(True)
        else:
            flags.append(False)
    return MatchOutcome(det_is_tp=tuple(flags), gt_matched=tuple(matched))


@dataclass(frozen=True)
class PrCurve:
    """(recall, precision) after each ranked detection; recall never decreases."""

    points: tuple[tuple[float, float], ...]


def precision_recall_curve(flags: Sequence[bool], n_gt: int) -> PrCurve:
    """Cumulative precision/recall along a ranked TP/FP flag sequence.

    With zero ground truths recall is 0 by convention (AP/AR report a
    sentinel upstream in that case).
    """
    if n_gt < 0:
        raise ValueError("n_gt must be >= 0")
    points = []
    tp = 0
    for k, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
        recall = tp / n_gt if n_gt else 0.0
        points.append((recall, tp / k))
    return PrCurve(points=tuple(points))


def average_precision(curve: PrCurve, mode: str = "interpolated-101") -> float:
    """Area under the precision envelope of a PR curve.

    exact-integral integrates the envelope over recall; interpolated-101
    averages the envelope at recalls 0.00, 0.01, ..., 1.00. The envelope
    replaces each precision with the maximum precision at equal or higher
    recall, and is 0 beyond the highest achieved recall.
    """
    if mode not in AP_MODES:
        raise ValueError(f"ap_mode must be one of {AP_MODES}, got {mode!r}")
    points = curve.points
    if not points:
        return 0.0
    envelope = []
    best = 0.0
    for _, precision in reversed(points):
        best = max(best, precision)
        envelope.append(best)
    envelope.reverse()

    if mode == "exact-integral":
        terms = []
        prev_recall = 0.0
        for (recall, _), env in zip(points, envelope):
            terms.append((recall - prev_recall) * env)
            prev_recall = recall
        return math.fsum(terms)

    samples = []
    for s in range(101):
        want = s / 100
        value = 0.0
        for (recall, _), env in zip(points, envelope):
            if recall >= want:
                value = env
                break
        samples.append(value)
    return math.fsum(samples) / 101


def average_recall(matched_by_threshold: Sequence[int], n_gt: int) -> float | None:
    """Mean over thresholds of the fraction of ground truths recovered.

    None (sentinel) when there are no ground truths.
    """
    if n_gt == 0:
        return None
    return math.fsum(m / n_gt for m in matched_by_threshold) / len(matched_by_threshold)


def mean_ap(per_class_values: Iterable[float | None]) -> float:
    """Arithmetic mean over classes, skipping sentinel (None) entries."""
    live = [v for v in per_class_values if v is not None]
    if not live:
        raise AllClassesEmpty("no class has any ground-truth instance")
    return math.fsum(live) / len(live)


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    ap: float | None
    ap50: float | None
    ap75: float | None
    ar: float | None
    ap_by_threshold: tuple[float | None, ...]
    n_gt: int
    n_det: int


@dataclass(frozen=True)
class EvalReport:
    per_class: dict[str, ClassMetrics]
    mean_ap: float | None
    mean_ap50: float | None
    mean_ap75: float | None
    mean_ar: float | None
    config: EvalConfig = field(default_factory=EvalConfig)


def _threshold_index(thresholds: tuple[float, ...], value: float) -> int | None:
    for i, t in enumerate(thresholds):
        if t == value:
            return i
    return None


def evaluate(
    ground_truths: Iterable[Annotation],
    detections: Sequence[Detection],
    taxonomy: Taxonomy,
    config: EvalConfig = EvalConfig(),
) -> EvalReport:
    """Score detections against VOC annotations, per class and aggregated."""
    annotations: dict[str, Annotation] = {}
    for ann in ground_truths:
        if ann.image_id in annotations:
            raise ValueError(f"duplicate ground-truth image_id {ann.image_id!r}")
        annotations[ann.image_id] = ann
    image_ids = sorted(annotations)

    gt_boxes: dict[tuple[str, int], list[RealBox]] = {}
    n_gt: dict[int, int] = {}
    for img in image_ids:
        for obj in annotations[img].objects:
            cid = taxonomy.class_id(obj.label)
            gt_boxes.setdefault((img, cid), []).append(obj.box.to_real())
            n_gt[cid] = n_gt.get(cid, 0) + 1

    dets_by: dict[tuple[str, int], list[tuple[float, int, RealBox]]] = {}
    n_det: dict[int, int] = {}
    for idx, det in enumerate(detections):
        if det.image_id not in annotations:
            raise UnknownImageId(f"detection #{idx} references unknown image {det.image_id!r}")
        cid = taxonomy.class_id(det.label)
        dets_by.setdefault((det.image_id, cid), []).append((det.score, idx, det.box.to_real()))
        n_det[cid] = n_det.get(cid, 0) + 1
    for key, group in dets_by.items():
        group.sort(key=lambda rec: (-rec[0], rec[1]))
        del group[config.max_detections :]

    class_ids = sorted(set(n_gt) | set(n_det))
    thresholds = config.iou_thresholds
    i50 = _threshold_index(thresholds, 0.50)
    i75 = _threshold_index(thresholds, 0.75)

    per_class: dict[str, ClassMetrics] = {}
    for cid in class_ids:
        total_gt = n_gt.get(cid, 0)
        ap_by_thr: list[float | None] = []
        matched_by_thr: list[int] = []
        for t in thresholds:
            pooled: list[tuple[float, int, bool]] = []
            matched_total = 0
            for img in image_ids:
                img_dets = dets_by.get((img, cid), [])
                img_gts = gt_boxes.get((img, cid), [])
                if not img_dets and not img_gts:
                    continue
                outcome = match_detections([b for _, _, b in img_dets], img_gts, t)
                matched_total += sum(outcome.gt_matched)
                pooled.extend(
                    (score, idx, flag)
                    for (score, idx, _), flag in zip(img_dets, outcome.det_is_tp)
                )
            matched_by_thr.append(matched_total)
            if total_gt == 0:
                ap_by_thr.append(None)
                continue
            pooled.sort(key=lambda rec: (-rec[0], rec[1]))
            curve = precision_recall_curve([flag for _, _, flag in pooled], total_gt)
            ap_by_thr.append(average_precision(curve, config.ap_mode))

        if total_gt:
            ap = math.fsum(ap_by_thr) / len(thresholds)
        else:
            ap = None
        label_text = taxonomy.label_of(cid).canonical
        per_class[label_text] = ClassMetrics(
            label=label_text,
            ap=ap,
            ap50=ap_by_thr[i50] if i50 is not None else None,
            ap75=ap_by_thr[i75] if i75 is not None else None,
            ar=average_recall(matched_by_thr, total_gt),
            ap_by_threshold=tuple(ap_by_thr),
            n_gt=total_gt,
            n_det=n_det.get(cid, 0),
        )

    def aggregate(metric: str) -> float | None:
        values = [getattr(m, metric) for m in per_class.values()]
        live = [v for v in values if v is not None]
        return math.fsum(live) / len(live) if live else None

    return EvalReport(
        per_class=per_class,
        mean_ap=aggregate("ap"),
        mean_ap50=aggregate("ap50"),
        mean_ap75=aggregate("ap75"),
        mean_ar=aggregate("ar"),
        config=config,
    )


@dataclass(frozen=True)
class SpeciesRollup:
    species: str
    ap: float | None
    ap50: float | None
    ap75: float | None
    ar: float | None
    n_classes: int


def species_rollup(report: EvalReport, taxonomy: Taxonomy) -> dict[str, SpeciesRollup]:
    """Unweighted mean of each species' per-week class metrics.

    Classes with sentinel values are skipped per metric; species appear in
    taxonomy order, only if the report contains at least one of their
    classes.
    """
    grouped: dict[str, list[ClassMetrics]] = {}
    for metrics in report.per_class.values():
        code = metrics.label.split("_", 1)[0]
        grouped.setdefault(code, []).append(metrics)

    def mean_of(values: list[float | None]) -> float | None:
        live = [v for v in values if v is not None]
        return math.fsum(live) / len(live) if live else None

    rollups: dict[str, SpeciesRollup] = {}
    for species in taxonomy.species_list:
        members = grouped.get(species.code)
        if not members:
            continue
        rollups[species.code] = SpeciesRollup(
            species=species.code,
            ap=mean_of([m.ap for m in members]),
            ap50=mean_of([m.ap50 for m in members]),
            ap75=mean_of([m.ap75 for m in members]),
            ar=mean_of([m.ar for m in members]),
            n_classes=len(members),
        )
    return rollups


# --- report serialization ----------------------------------------------------

def report_to_dict(report: EvalReport, rollup: Mapping[str, SpeciesRollup] | None = None) -> dict:
    """Machine-readable form of a report (stable key order, JSON-friendly)."""
    payload: dict = {
        "config": {
            "iou_thresholds": list(report.config.iou_thresholds),
            "max_detections": report.config.max_detections,
            "ap_mode": report.config.ap_mode,
        },
        "aggregates": {
            "mean_ap": report.mean_ap,
            "mean_ap50": report.mean_ap50,
            "mean_ap75": report.mean_ap75,
            "mean_ar": report.mean_ar,
        },
        "classes": {
            label: {
                "ap": m.ap,
                "ap50": m.ap50,
                "ap75": m.ap75,
                "ar": m.ar,
                "n_gt": m.n_gt,
                "n_det": m.n_det,
            }
            for label, m in report.per_class.items()
        },
    }
    if rollup is not None:
        payload["species"] = {
            code: {
                "ap": r.ap,
                "ap50": r.ap50,
                "ap75": r.ap75,
                "ar": r.ar,
                "n_classes": r.n_classes,
            }
            for code, r in rollup.items()
        }
    return payload


def _fmt(value: float | None) -> str:
    return "  -  " if value is None else f"{value:.3f}"


def format_report_text(report: EvalReport, rollup: Mapping[str, SpeciesRollup] | None = None) -> str:
    """Human-readable report: per-class table plus the aggregate line."""
    lines = []
    header = f"{'class':<20} {'AP':>6} {'AP50':>6} {'AP75':>6} {'AR':>6} {'n_gt':>6} {'n_det':>6}"
    lines.append(header)
    lines.append("-" * len(header))
    for label, m in report.per_class.items():
        lines.append(
            f"{label:<20} {_fmt(m.ap):>6} {_fmt(m.ap50):>6} {_fmt(m.ap75):>6} "
            f"{_fmt(m.ar):>6} {m.n_gt:>6} {m.n_det:>6}"
        )
    lines.append("-" * len(header))
    lines.append(
        f"{'all classes':<20} {_fmt(report.mean_ap):>6} {_fmt(report.mean_ap50):>6} "
        f"{_fmt(report.mean_ap75):>6} {_fmt(report.mean_ar):>6}"
    )
    if rollup:
        lines.append("")
        lines.append(f"{'species':<20} {'AP':>6} {'AP50':>6} {'AP75':>6} {'AR':>6} {'weeks':>6}")
        for code, r in rollup.items():
            lines.append(
                f"{code:<20} {_fmt(r.ap):>6} {_fmt(r.ap50):>6} {_fmt(r.ap75):>6} "
                f"{_fmt(r.ar):>6} {r.n_classes:>6}"
            )
    return "\n".join(lines) + "\n"
